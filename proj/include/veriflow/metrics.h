#pragma once

#include "veriflow/gateway.h"
#include "veriflow/plan.h"
#include "veriflow/trace.h"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace veriflow {

struct CostBreakdown {
  double planner = 0;
  double executor = 0;
  double verifier = 0;
  double total = 0;
};

// Throws UnknownModel.
CostBreakdown cost_report(const std::vector<CallRecord> &calls, const PriceTable &prices);
CostBreakdown cost_report(const TaskTrace &trace, const PriceTable &prices);

struct GroundTruthLabel {
  std::string task_id;
  bool final_answer_correct = false;
};

struct LabeledOutcome {
  bool system_pass = false;
  GroundTruthLabel label;
};

struct FpFnRates {
  double fp_rate = 0; // passed but wrong, over all outcomes
  double fn_rate = 0; // failed but right, over all outcomes
};

// Throws EmptyInput.
FpFnRates fp_fn_rates(const std::vector<LabeledOutcome> &outcomes);

// {"task": true, ...} or [{"task_id": ..., "final_answer_correct": ...}].
// Throws std::invalid_argument on duplicates or malformed entries.
std::vector<GroundTruthLabel> parse_labels(const nlohmann::json &j);

// What the reports need from one run, whether it came from memory or
// from a replayed trace file.
struct RunSummary {
  std::string run_id;
  std::string task_id;
  std::optional<std::string> status; // absent if the run never finished
  int plans_generated = 0;
  // Attempts per (iteration, node) that executed at least once.
  std::map<std::pair<int, std::string>, int> attempts;
  struct VfExecution {
    int iteration = 0;
    std::string node_id;
    std::string vf_name;
    VfKind kind = VfKind::executable;
    std::size_t payload_chars = 0;
  };
  std::vector<VfExecution> vf_executions;
  std::vector<CallRecord> calls;
};

// Groups events by run id, keeping first-appearance order.
std::vector<RunSummary> replay_runs(const std::vector<TraceEvent> &events);

RunSummary summarize_trace(const TaskTrace &trace, std::string run_id,
                           std::string task_id, std::optional<std::string> status);

struct VfKindProfile {
  double avg_count_per_task = 0;
  double avg_length_chars = 0; // 0 when there were none
};

struct VfProfile {
  // Every execution counts, so a retried node's VFs count again.
  VfKindProfile executable;
  VfKindProfile judge;
  // Each (iteration, node, VF) once.
  VfKindProfile distinct_executable;
  VfKindProfile distinct_judge;
};

// Throws EmptyInput for no runs.
VfProfile vf_profile(const std::vector<RunSummary> &runs);

struct RunAverages {
  double iterations = 0; // plans generated per task
  double attempts_per_node = 0;
};

// Means over runs; runs that executed no node are left out of the
// attempts mean. Throws EmptyInput.
RunAverages run_averages(const std::vector<RunSummary> &runs);

struct Report {
  std::size_t runs = 0;
  CostBreakdown cost_total;
  CostBreakdown cost_per_task;
  RunAverages averages;
  VfProfile vf;
  std::optional<FpFnRates> fp_fn;
  std::size_t labeled_runs = 0;
  std::vector<std::string> warnings;
};

Report build_report(const std::vector<RunSummary> &runs, const PriceTable &prices,
                    const std::optional<std::vector<GroundTruthLabel>> &labels);

ordered_json report_to_json(const Report &report);
std::string report_to_text(const Report &report);

} // namespace veriflow
