#pragma once

#include "veriflow/record.h"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace veriflow {

// Literal used in plan inputs to reference the raw user task.
inline constexpr std::string_view kUserTaskRef = "USER_TASK";

// A node input: either the raw user task or <node.var>.
struct InputRef {
  std::optional<std::string> node_id; // empty for USER_TASK
  std::string variable;               // "USER_TASK" for the user task

  static InputRef user_task() { return {std::nullopt, std::string(kUserTaskRef)}; }
  static InputRef from(std::string node, std::string var) {
    return {std::move(node), std::move(var)};
  }
  bool is_user_task() const { return !node_id.has_value(); }

  // "USER_TASK" or "<node.var>"
  std::string to_string() const;

  friend bool operator==(const InputRef &, const InputRef &) = default;
};

enum class VfKind { executable, judge };

std::string_view to_string(VfKind kind);

struct VerificationSpec {
  std::string name;
  VfKind kind = VfKind::executable;
  // Python code (executable) or judge criterion (judge).
  std::string payload;

  friend bool operator==(const VerificationSpec &,
                         const VerificationSpec &) = default;
};

struct PlanNode {
  std::string id;
  std::string name;
  std::string instruction;
  std::vector<InputRef> inputs;
  std::vector<std::string> outputs;
  std::vector<VerificationSpec> verification;
  bool marked_final = false;

  friend bool operator==(const PlanNode &, const PlanNode &) = default;
};

struct PlanEdge {
  std::string from;
  std::string to;

  friend bool operator==(const PlanEdge &, const PlanEdge &) = default;
};

struct Plan {
  std::vector<PlanNode> nodes;
  std::vector<PlanEdge> edges;
  // Empty when no final node can be determined; validate_plan reports it.
  std::string final_node_id;

  const PlanNode *find(std::string_view id) const;
  const PlanNode &node(std::string_view id) const; // throws UnknownNode

  friend bool operator==(const Plan &, const Plan &) = default;
};

// Parses the planner's JSON plan. One surrounding markdown code fence is
// tolerated. Unknown fields are ignored. Throws ParseError.
Plan parse_plan(std::string_view json_text);

// Serializes to the planner schema ("nodes"/"edges"). The final node is
// written with "final": true when it was explicitly marked.
ordered_json plan_to_json(const Plan &plan);
std::string serialize_plan(const Plan &plan, int indent = 2);

struct Violation {
  std::string code;
  std::optional<std::string> node_id;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
  // Findings that do not reject the plan (e.g. a node without VFs).
  std::vector<Violation> warnings;
};

namespace violation {
inline constexpr const char *kEmptyId = "EMPTY_NODE_ID";
inline constexpr const char *kDuplicateId = "DUPLICATE_NODE_ID";
inline constexpr const char *kDanglingEdge = "DANGLING_EDGE";
inline constexpr const char *kCycle = "CYCLE";
inline constexpr const char *kUnresolvedInput = "UNRESOLVED_INPUT";
inline constexpr const char *kDuplicateOutput = "DUPLICATE_OUTPUT";
inline constexpr const char *kDuplicateVfName = "DUPLICATE_VF_NAME";
inline constexpr const char *kEmptyVfPayload = "EMPTY_VF_PAYLOAD";
inline constexpr const char *kNameCollision = "NAME_COLLISION";
inline constexpr const char *kNoFinalNode = "NO_FINAL_NODE";
inline constexpr const char *kNoVerification = "NO_VERIFICATION"; // warning
} // namespace violation

ValidationReport validate_plan(const Plan &plan);

std::string format_report(const ValidationReport &report);

// Kahn's algorithm; among ready nodes the earliest-declared goes first.
// Throws CycleError when the edge relation has a cycle.
std::vector<std::string> topological_order(const Plan &plan);

// Ids of every node from which `node_id` is reachable along edges.
std::vector<std::string> ancestors(const Plan &plan, std::string_view node_id);

// Per-iteration store of verified node outputs.
using Blackboard = std::map<std::string, StructuredRecord, std::less<>>;

// Merges the values a node reads into one record keyed by variable name.
// Throws MissingUpstreamValue or NameCollision.
StructuredRecord resolve_input_refs(const Plan &plan, std::string_view node_id,
                                    const Blackboard &blackboard,
                                    std::string_view user_task);

// Strips one leading/trailing ``` fence (with optional language tag) and
// surrounding whitespace.
std::string strip_code_fence(std::string_view text);

} // namespace veriflow
