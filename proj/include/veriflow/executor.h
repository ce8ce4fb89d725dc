#pragma once

#include "veriflow/gateway.h"
#include "veriflow/plan.h"
#include "veriflow/record.h"
#include "veriflow/tools.h"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veriflow {

struct ReactStep {
  enum class Kind { action, final_answer, malformed };

  Kind kind = Kind::malformed;
  std::string thought;
  std::optional<std::string> action_name;
  std::optional<std::string> action_input_json;
  std::optional<std::string> answer;
  // Why a malformed turn was rejected.
  std::string diagnostic;
};

std::string_view to_string(ReactStep::Kind kind);

// Reads one model turn. Whichever of "Action:" / "Answer:" appears first
// decides the kind; for answers the last "Answer:" block is taken. A
// "Thought:" line is optional.
ReactStep parse_react_step(std::string_view completion);

// Parses the answer as a JSON object (after stripping one code fence) and
// requires every expected variable. Extra keys are kept.
// Throws StructuredOutputError.
StructuredRecord extract_structured_output(std::string_view answer,
                                           const std::vector<std::string> &expected_vars);

struct TranscriptEntry {
  std::string model_turn;
  ReactStep step;
  std::optional<ToolResult> observation; // set for action steps only
};

struct ExecutionResult {
  StructuredRecord outputs;
  std::vector<TranscriptEntry> transcript;
  int rounds_used = 0;
  bool succeeded = false;
  // Why the attempt produced no usable output (round cap, bad structure).
  std::optional<std::string> error;
};

struct ExecutorConfig {
  std::string model_id = "gpt-4o-mini";
  int round_cap = 20;
  double temperature = 1.0;
  double top_p = 1.0;
};

// Executor system prompt with the registry's tool descriptions.
std::string build_executor_system_prompt(const ToolRegistry &registry);

// Task prompt for one node: name, instruction, context record, and the
// structured-output guide listing the node's declared outputs.
std::string build_executor_task_prompt(const PlanNode &node,
                                       const StructuredRecord &context);

// Drives the ReAct loop for one node until a final answer or the round cap.
// Each model call is one round. Gateway errors propagate.
ExecutionResult run_subtask(Gateway &gateway, const ToolRegistry &registry,
                            ToolContext &tool_ctx, const PlanNode &node,
                            const StructuredRecord &context,
                            const ExecutorConfig &cfg);

// What to do after a non-action turn: stop the loop, or send `reply` as the
// next user message and keep going.
struct TurnDecision {
  bool stop = true;
  std::string reply;
};

using TurnHandler =
    std::function<TurnDecision(const ReactStep &step, std::string_view raw)>;

struct AgentLoopResult {
  std::vector<TranscriptEntry> transcript;
  int rounds_used = 0;
  bool stopped = false; // false when the round cap ran out
};

// ReAct driver shared by the executor and the judge verifier. Action turns
// invoke tools and feed back "Observation: ..."; every other turn goes to
// `on_turn`.
AgentLoopResult run_agent_loop(Gateway &gateway, Component component,
                               const ToolRegistry &registry, ToolContext &tool_ctx,
                               std::vector<ChatMessage> messages,
                               const ExecutorConfig &cfg, const TurnHandler &on_turn);

} // namespace veriflow
