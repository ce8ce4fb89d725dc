#pragma once

#include "veriflow/executor.h"
#include "veriflow/gateway.h"
#include "veriflow/harness.h"
#include "veriflow/plan.h"
#include "veriflow/planner.h"
#include "veriflow/tools.h"
#include "veriflow/trace.h"
#include "veriflow/trace_store.h"
#include "veriflow/verifier.h"

#include <optional>
#include <string>
#include <string_view>

namespace veriflow {

// Context key carrying the previous attempt on a retry.
inline constexpr std::string_view kPreviousAttemptKey = "PREVIOUS_ATTEMPT";

struct CoordinatorConfig {
  int max_retries = 3;    // attempts per node per iteration
  int max_iterations = 5; // plans generated per task
  int executor_round_cap = 20;
  std::string executor_model = "gpt-4o-mini";
  double temperature = 1.0;
  double top_p = 1.0;
  VerifierConfig verifier;

  // Throws std::invalid_argument.
  void validate() const;
};

enum class TaskStatus { success, failure };

std::string_view to_string(TaskStatus status);

struct TaskOutcome {
  TaskStatus status = TaskStatus::failure;
  std::optional<StructuredRecord> final_output;
  TaskTrace trace;
  int iterations_used = 0;
  double total_cost_usd = 0;
  // Why a failure happened (retries and replans exhausted, planner gave up).
  std::optional<std::string> error;
};

struct PriorAttempt {
  std::optional<StructuredRecord> outputs; // absent when execution failed
  std::string feedback;
};

// Resolved inputs, plus PREVIOUS_ATTEMPT = {"outputs": ..., "feedback": ...}
// on a retry. Throws MissingUpstreamValue.
StructuredRecord compile_context(const Plan &plan, std::string_view node_id,
                                 const Blackboard &blackboard,
                                 std::string_view user_task,
                                 const std::optional<PriorAttempt> &prior);

// What one run owns besides the shared gateway backend and registry.
struct RunEnvironment {
  ToolContext tool_ctx;
  Harness *harness = nullptr;
  const PriceTable *prices = nullptr; // no cost accounting when null
  EventRecorder *events = nullptr;    // no trace events when null
  std::string task_id;
};

// Plans, executes every node in topological order with verification and
// retries, and replans on exhausted retries, up to the configured limits.
// Gateway, harness and pricing errors propagate; PlanGenerationFailed
// becomes a failure outcome. Emits the terminal "outcome" event only when
// it returns normally.
TaskOutcome run_task(std::string_view task, const PlannerConfig &planner_cfg,
                     const CoordinatorConfig &coord_cfg, Gateway &gateway,
                     const ToolRegistry &registry, RunEnvironment &env);

// Event payload listing each call's component, model and usage.
ordered_json usage_payload(const std::vector<CallRecord> &calls);

} // namespace veriflow
