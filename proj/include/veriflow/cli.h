#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace veriflow::cli {

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kEngineError = 1;
inline constexpr int kTaskFailure = 2;
inline constexpr int kValidationFailure = 3;
} // namespace exit_code

struct RunConfig {
  std::string planner_model = "gpt-4.1";
  std::string executor_model = "gpt-4o-mini";
  std::string verifier_model = "gpt-4o-mini";
  std::string backend = "http"; // http | scripted
  std::optional<std::filesystem::path> script;
  int max_retries = 3;
  int max_iterations = 5;
  int executor_round_cap = 20;
  int judge_round_cap = 10;
  int max_parse_retries = 2;
  int vf_timeout_s = 10;
  double temperature = 1.0;
  double top_p = 1.0;
  std::optional<std::filesystem::path> prices;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> trace_out;
  std::vector<std::string> harness_cmd; // argv of the sandbox process
  // HTTP backend; unset values fall back to VERIMAP_BASE_URL /
  // VERIMAP_API_KEY, then to the client defaults.
  std::optional<std::string> base_url;
  std::optional<std::string> api_key;
  int request_timeout_s = 120;
  std::optional<std::string> demo_example;

  // Keys mirror the field names. Unknown keys are rejected.
  // Throws std::invalid_argument.
  static RunConfig from_json(const nlohmann::json &j);
  void validate() const;
};

struct TaskSpec {
  std::string task_id;
  std::string task;
  std::optional<bool> label; // ground truth, if the file carries one
};

// Plain text, or JSON {"task": ..., "task_id": ..., "label": ...}. The id
// defaults to the file stem. Throws std::runtime_error on IO errors.
TaskSpec load_task_file(const std::filesystem::path &path);

// Either a JSON array of completion strings or {"responses": [...]}.
std::vector<std::string> load_script_file(const std::filesystem::path &path);

// Entry point shared by the executable and the tests.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace veriflow::cli
