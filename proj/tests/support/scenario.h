#pragma once

#include "fake_harness.h"

#include "veriflow/coordinator.h"

#include <memory>
#include <string>
#include <vector>

namespace veriflow::testing {

// Compact node description for scripted plans.
struct NodeSpec {
  std::string id;
  std::vector<std::string> inputs;  // "USER_TASK" or "<node.var>"
  std::vector<std::string> outputs;
  std::vector<std::string> python;  // one executable VF per entry
  std::vector<std::string> judge;   // one judge VF per entry
  bool final = false;
};

std::string plan_text(const std::vector<NodeSpec> &nodes,
                      const std::vector<std::pair<std::string, std::string>> &edges);

// A ReAct final answer turn carrying `outputs` as JSON.
std::string answer(const nlohmann::json &outputs);
std::string answer_raw(const std::string &text);
std::string action(const std::string &tool, const nlohmann::json &args);
std::string judge_verdict(bool pass, const std::string &reasoning);

struct ScenarioResult {
  TaskOutcome outcome;
  std::vector<ChatRequest> requests; // everything the backend received
  std::vector<CallRecord> calls;
  std::vector<TraceEvent> events;
  std::size_t unused_script = 0;
  int harness_calls = 0;

  int calls_for(Component c) const;
  // Node ids in the order their attempts started, per iteration.
  std::vector<std::string> attempt_order(int iteration) const;
};

ScenarioResult run_scenario(const std::string &task, std::vector<std::string> script,
                            CoordinatorConfig coord = {}, PlannerConfig planner = {});

} // namespace veriflow::testing
