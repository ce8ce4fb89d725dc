#pragma once

#include "veriflow/harness.h"

#include <atomic>
#include <memory>

namespace veriflow::testing {

// In-process stand-in for the Python sandbox. Understands one statement
// per line:
//   assert outputs["k"] == <json>     (also inputs[...], !=, True/False/None)
//   assert "k" in outputs
//   time.sleep(...)                   -> reported as a timeout
//   print(<json>)                     -> appended to stdout (exec mode)
// Anything else is a SyntaxError. Failures carry a Python-style traceback.
HarnessResponse evaluate_assertions(const HarnessRequest &request);

class FakeHarness final : public Harness {
public:
  HarnessResponse evaluate(const HarnessRequest &request) override {
    ++calls_;
    return evaluate_assertions(request);
  }
  int calls() const { return calls_; }

private:
  std::atomic<int> calls_{0};
};

} // namespace veriflow::testing
