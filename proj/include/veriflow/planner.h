#pragma once

#include "veriflow/gateway.h"
#include "veriflow/plan.h"
#include "veriflow/trace.h"

#include <optional>
#include <string>
#include <string_view>

namespace veriflow {

struct PlannerConfig {
  std::string model_id = "gpt-4.1";
  std::string tool_descriptions;
  std::optional<std::string> demo_example;
  int max_parse_retries = 2;
  double temperature = 1.0;
  double top_p = 1.0;
};

struct FailureContext {
  std::string previous_plan_json;
  std::string failed_node_id;
  std::string trace_excerpt;
};

inline constexpr std::size_t kFailureExcerptLimit = 8000;

// Throws std::invalid_argument for an empty task.
std::string build_planning_prompt(std::string_view task, const PlannerConfig &cfg);

// base_prompt followed by a blank line and the replanning block.
std::string build_replanning_prompt(std::string_view base_prompt,
                                    const FailureContext &fc);

// Describes the failed node's last attempt in the most recent iteration of
// `trace`, then each ancestor up to two edges away (nearest first): id,
// instruction, inputs, last output, and for the failed node every failed
// VF with its feedback. Cut to kFailureExcerptLimit characters.
// Throws UnknownNode; std::invalid_argument if the node has no attempt.
FailureContext extract_failure_context(const Plan &plan, const TaskTrace &trace,
                                       std::string_view failed_node);

// Ancestors reachable within `max_depth` reverse edges, ordered by distance
// then declaration order.
std::vector<std::pair<std::string, int>> ancestors_within(const Plan &plan,
                                                          std::string_view node_id,
                                                          int max_depth);

// Prompts the planner (replanning variant when `fc` is set), parses and
// validates the reply, and re-asks with the problems listed up to
// cfg.max_parse_retries times. Throws PlanGenerationFailed.
Plan generate_plan(Gateway &gateway, const PlannerConfig &cfg, std::string_view task,
                   const std::optional<FailureContext> &fc);

} // namespace veriflow
