#pragma once

#include "veriflow/executor.h"
#include "veriflow/gateway.h"
#include "veriflow/plan.h"
#include "veriflow/record.h"
#include "veriflow/verifier.h"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veriflow {

struct NodeAttempt {
  std::string node_id;
  int iteration = 1;   // 1-based plan number
  int retry_index = 0; // 0-based attempt number within (iteration, node)
  // Context handed to the executor, PREVIOUS_ATTEMPT included.
  StructuredRecord context;
  // Resolved inputs only; what the VFs saw as `inputs`.
  StructuredRecord inputs;
  ExecutionResult execution;
  VerdictReport verdict;
};

struct IterationTrace {
  int iteration = 1;
  std::optional<Plan> plan; // absent when plan generation failed
  std::string plan_json;
  std::vector<NodeAttempt> attempts;
  std::optional<std::string> failed_node;
  std::optional<std::string> error;
};

struct TaskTrace {
  std::vector<IterationTrace> iterations;
  std::vector<CallRecord> calls;

  int plans_generated() const;
  // Last attempt of `node_id` in the given iteration, or nullptr.
  const NodeAttempt *last_attempt(int iteration, std::string_view node_id) const;
  int attempts_for(int iteration, std::string_view node_id) const;
};

enum class EventKind {
  plan_generated,
  attempt_started,
  tool_call,
  vf_result,
  verdict,
  replanned,
  outcome,
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name); // throws SchemaMismatch

inline constexpr int kTraceSchemaVersion = 1;

struct TraceEvent {
  std::int64_t ts = 0;
  std::string run_id;
  int iteration = 0;
  std::optional<std::string> node_id;
  EventKind kind = EventKind::outcome;
  ordered_json payload = ordered_json::object();

  ordered_json to_json() const;
  // Throws SchemaMismatch for a wrong "v" or missing fields.
  static TraceEvent from_json(const ordered_json &j);

  friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
};

} // namespace veriflow
