#pragma once

#include "veriflow/executor.h"
#include "veriflow/gateway.h"
#include "veriflow/harness.h"
#include "veriflow/plan.h"
#include "veriflow/record.h"
#include "veriflow/tools.h"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace veriflow {

struct VfResult {
  std::string vf_name;
  VfKind kind = VfKind::executable;
  bool passed = false;
  // Traceback for executable VFs, judge reasoning for judge VFs. Never
  // empty on failure.
  std::string feedback;
  std::optional<TokenUsage> usage; // judge calls only
  // Stands in for a failed execution; not a planner-authored VF.
  bool synthetic = false;
};

struct VerdictReport {
  std::vector<VfResult> results;
  bool passed = true;
  std::string feedback_bundle;
};

struct VerifierConfig {
  std::string model_id = "gpt-4o-mini";
  int judge_round_cap = 10;
  int vf_timeout_s = 10;
  double temperature = 1.0;
  double top_p = 1.0;
};

// Everything verify_node needs from the surrounding run.
struct VerifierDeps {
  Harness *harness = nullptr;
  Gateway *gateway = nullptr;
  const ToolRegistry *registry = nullptr;
  ToolContext *tool_ctx = nullptr;
  VerifierConfig cfg;
};

// Runs assertion code in the sandbox with `inputs`/`outputs` bound.
// Throws HarnessUnavailable; a timeout is a failed result with feedback
// "timeout".
VfResult run_executable_vf(Harness *harness, const VerificationSpec &spec,
                           const StructuredRecord &inputs,
                           const StructuredRecord &outputs, int timeout_s);

// Tool-enabled judge agent. Passes iff the judge returns success_score 1.
// One corrective re-ask is allowed for unreadable output.
VfResult run_judge_vf(Gateway &gateway, const ToolRegistry &registry,
                      ToolContext &tool_ctx, const VerificationSpec &spec,
                      std::string_view agent_input, const StructuredRecord &output,
                      const VerifierConfig &cfg);

struct JudgeVerdict {
  int success_score = 0;
  std::string reasoning;
};

// Reads {"success_score": 0|1, "reasoning": "..."} from judge output,
// tolerating a code fence or surrounding prose. nullopt if unreadable.
std::optional<JudgeVerdict> parse_judge_verdict(std::string_view text);

// Strict AND. The bundle lists each failed VF as
//   "VF <name> failed:\n<feedback>"
// in result order, separated by blank lines; "" when nothing failed.
std::pair<bool, std::string> aggregate_verdicts(const std::vector<VfResult> &results);

// The judge's view of what the executor was asked to do.
std::string render_agent_input(const PlanNode &node, const StructuredRecord &inputs);

// Runs every VF in declaration order (no early exit) and aggregates.
VerdictReport verify_node(const PlanNode &node, const StructuredRecord &inputs,
                          const StructuredRecord &outputs, VerifierDeps &deps);

// As verify_node, but an execution that produced no structured output
// fails immediately with the execution error as feedback.
VerdictReport verify_attempt(const PlanNode &node, const StructuredRecord &inputs,
                             const ExecutionResult &execution, VerifierDeps &deps);

// Name of the synthetic result recorded when execution itself failed.
inline constexpr const char *kExecutionCheckName = "structured_output";

} // namespace veriflow
