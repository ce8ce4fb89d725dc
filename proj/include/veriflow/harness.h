#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace veriflow {

enum class HarnessMode { vf, exec };

// One request to the code sandbox. In vf mode the code sees `inputs` and
// `outputs` bound to the given records.
struct HarnessRequest {
  HarnessMode mode = HarnessMode::vf;
  std::string code;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
  std::optional<std::string> stdin_text;
  int timeout_s = 10;

  nlohmann::ordered_json to_json() const;
};

struct HarnessResponse {
  bool passed = false;
  std::string stdout_text;
  std::optional<std::string> traceback;
  std::optional<std::string> error_type;
  std::int64_t duration_ms = 0;

  // Throws std::invalid_argument if required fields are missing.
  static HarnessResponse from_json(const nlohmann::json &j);
  bool timed_out() const { return error_type && *error_type == "timeout"; }
};

class Harness {
public:
  virtual ~Harness() = default;
  virtual HarnessResponse evaluate(const HarnessRequest &request) = 0;
};

// In-process stand-in driven by a callback; used where no sandbox process
// is wanted (tests, dry runs).
class CallbackHarness final : public Harness {
public:
  using Fn = std::function<HarnessResponse(const HarnessRequest &)>;
  explicit CallbackHarness(Fn fn) : fn_(std::move(fn)) {}
  HarnessResponse evaluate(const HarnessRequest &request) override {
    return fn_(request);
  }

private:
  Fn fn_;
};

// Talks to the sandbox subprocess over line-delimited JSON on stdio. The
// process is started lazily, must greet with {"hello":"vf-harness","v":1},
// and is restarted if it dies or overruns a request deadline.
class SubprocessHarness final : public Harness {
public:
  // `argv` is the command to launch, e.g. {"python3", "harness/vf_harness.py"}.
  explicit SubprocessHarness(std::vector<std::string> argv,
                             std::chrono::milliseconds grace = std::chrono::seconds(2));
  ~SubprocessHarness() override;

  SubprocessHarness(const SubprocessHarness &) = delete;
  SubprocessHarness &operator=(const SubprocessHarness &) = delete;

  // Throws HarnessUnavailable if the process cannot be started or greeted.
  HarnessResponse evaluate(const HarnessRequest &request) override;

private:
  void start();
  void stop();
  // Reads one line before `deadline`; nullopt on timeout or EOF.
  std::optional<std::string>
  read_line(std::chrono::steady_clock::time_point deadline);

  std::vector<std::string> argv_;
  std::chrono::milliseconds grace_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

} // namespace veriflow
