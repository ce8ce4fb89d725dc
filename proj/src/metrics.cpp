#include "veriflow/metrics.h"

#include "veriflow/error.h"

#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace veriflow {

CostBreakdown cost_report(const std::vector<CallRecord> &calls,
                          const PriceTable &prices) {
  CostBreakdown b;
  for (const auto &c : calls) {
    const double usd = cost_of(c.usage, c.model_id, prices);
    switch (c.component) {
    case Component::planner:
      b.planner += usd;
      break;
    case Component::executor:
      b.executor += usd;
      break;
    case Component::verifier:
      b.verifier += usd;
      break;
    }
  }
  b.total = b.planner + b.executor + b.verifier;
  return b;
}

CostBreakdown cost_report(const TaskTrace &trace, const PriceTable &prices) {
  return cost_report(trace.calls, prices);
}

FpFnRates fp_fn_rates(const std::vector<LabeledOutcome> &outcomes) {
  if (outcomes.empty()) {
    throw EmptyInput("fp/fn rates need at least one labeled outcome");
  }
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (const auto &o : outcomes) {
    fp += (o.system_pass && !o.label.final_answer_correct) ? 1 : 0;
    fn += (!o.system_pass && o.label.final_answer_correct) ? 1 : 0;
  }
  const auto n = static_cast<double>(outcomes.size());
  return {static_cast<double>(fp) / n, static_cast<double>(fn) / n};
}

std::vector<GroundTruthLabel> parse_labels(const nlohmann::json &j) {
  std::vector<GroundTruthLabel> out;
  std::set<std::string> seen;
  auto add = [&](std::string id, const nlohmann::json &value) {
    if (!value.is_boolean()) {
      throw std::invalid_argument("label for \"" + id + "\" is not a boolean");
    }
    if (!seen.insert(id).second) {
      throw std::invalid_argument("duplicate label for task \"" + id + "\"");
    }
    out.push_back({std::move(id), value.get<bool>()});
  };
  if (j.is_object()) {
    for (const auto &[id, value] : j.items()) {
      add(id, value);
    }
  } else if (j.is_array()) {
    for (const auto &entry : j) {
      if (!entry.is_object() || !entry.contains("task_id") ||
          !entry["task_id"].is_string() || !entry.contains("final_answer_correct")) {
        throw std::invalid_argument(
            "label entries need \"task_id\" and \"final_answer_correct\"");
      }
      add(entry["task_id"].get<std::string>(), entry["final_answer_correct"]);
    }
  } else {
    throw std::invalid_argument("labels must be a JSON object or array");
  }
  return out;
}

namespace {

RunSummary &summary_for(std::vector<RunSummary> &runs, std::map<std::string, std::size_t> &index,
                        const std::string &run_id) {
  auto [it, inserted] = index.emplace(run_id, runs.size());
  if (inserted) {
    runs.push_back({});
    runs.back().run_id = run_id;
  }
  return runs[it->second];
}

VfKind vf_kind_from(std::string_view s) {
  if (s == "executable") {
    return VfKind::executable;
  }
  if (s == "judge") {
    return VfKind::judge;
  }
  throw SchemaMismatch("unknown VF kind \"" + std::string(s) + "\"");
}

} // namespace

std::vector<RunSummary> replay_runs(const std::vector<TraceEvent> &events) {
  std::vector<RunSummary> runs;
  std::map<std::string, std::size_t> index;
  try {
    for (const auto &e : events) {
      auto &run = summary_for(runs, index, e.run_id);
      const auto &p = e.payload;
      switch (e.kind) {
      case EventKind::plan_generated:
        ++run.plans_generated;
        break;
      case EventKind::attempt_started:
        ++run.attempts[{e.iteration, e.node_id.value_or("")}];
        break;
      case EventKind::vf_result:
        if (!p.value("synthetic", false)) {
          run.vf_executions.push_back({e.iteration, e.node_id.value_or(""),
                                       p.at("vf").get<std::string>(),
                                       vf_kind_from(p.at("kind").get<std::string>()),
                                       p.at("payload_chars").get<std::size_t>()});
        }
        break;
      case EventKind::outcome:
        run.status = p.at("status").get<std::string>();
        if (auto t = p.find("task_id"); t != p.end() && t->is_string()) {
          run.task_id = t->get<std::string>();
        }
        run.calls.clear();
        for (const auto &u : p.at("usage")) {
          CallRecord c;
          c.component = component_from_string(u.at("component").get<std::string>());
          c.model_id = u.at("model").get<std::string>();
          c.usage.input_tokens = u.at("input").get<std::uint64_t>();
          c.usage.cached_input_tokens = u.at("cached").get<std::uint64_t>();
          c.usage.output_tokens = u.at("output").get<std::uint64_t>();
          run.calls.push_back(std::move(c));
        }
        break;
      default:
        break;
      }
    }
  } catch (const nlohmann::json::exception &ex) {
    throw SchemaMismatch(std::string("malformed event payload: ") + ex.what());
  } catch (const std::invalid_argument &ex) {
    throw SchemaMismatch(std::string("malformed event payload: ") + ex.what());
  }
  return runs;
}

RunSummary summarize_trace(const TaskTrace &trace, std::string run_id,
                           std::string task_id, std::optional<std::string> status) {
  RunSummary s;
  s.run_id = std::move(run_id);
  s.task_id = std::move(task_id);
  s.status = std::move(status);
  s.plans_generated = trace.plans_generated();
  for (const auto &it : trace.iterations) {
    for (const auto &a : it.attempts) {
      ++s.attempts[{a.iteration, a.node_id}];
      const auto *node = it.plan ? it.plan->find(a.node_id) : nullptr;
      for (const auto &r : a.verdict.results) {
        if (r.synthetic) {
          continue;
        }
        std::size_t chars = 0;
        if (node != nullptr) {
          for (const auto &vf : node->verification) {
            if (vf.name == r.vf_name) {
              chars = vf.payload.size();
            }
          }
        }
        s.vf_executions.push_back({a.iteration, a.node_id, r.vf_name, r.kind, chars});
      }
    }
  }
  s.calls = trace.calls;
  return s;
}

namespace {

struct Tally {
  std::size_t count = 0;
  std::size_t chars = 0;

  VfKindProfile profile(std::size_t runs) const {
    return {static_cast<double>(count) / static_cast<double>(runs),
            count == 0 ? 0.0 : static_cast<double>(chars) / static_cast<double>(count)};
  }
};

} // namespace

VfProfile vf_profile(const std::vector<RunSummary> &runs) {
  if (runs.empty()) {
    throw EmptyInput("VF profile needs at least one run");
  }
  Tally exec, judge, distinct_exec, distinct_judge;
  for (const auto &run : runs) {
    std::set<std::tuple<int, std::string, std::string>> seen;
    for (const auto &v : run.vf_executions) {
      auto &all = v.kind == VfKind::executable ? exec : judge;
      ++all.count;
      all.chars += v.payload_chars;
      if (seen.insert({v.iteration, v.node_id, v.vf_name}).second) {
        auto &d = v.kind == VfKind::executable ? distinct_exec : distinct_judge;
        ++d.count;
        d.chars += v.payload_chars;
      }
    }
  }
  const auto n = runs.size();
  return {exec.profile(n), judge.profile(n), distinct_exec.profile(n),
          distinct_judge.profile(n)};
}

RunAverages run_averages(const std::vector<RunSummary> &runs) {
  if (runs.empty()) {
    throw EmptyInput("averages need at least one run");
  }
  RunAverages avg;
  double attempt_sum = 0;
  std::size_t attempt_runs = 0;
  for (const auto &run : runs) {
    avg.iterations += run.plans_generated;
    if (run.attempts.empty()) {
      continue;
    }
    int total = 0;
    for (const auto &[key, n] : run.attempts) {
      total += n;
    }
    attempt_sum += static_cast<double>(total) / static_cast<double>(run.attempts.size());
    ++attempt_runs;
  }
  avg.iterations /= static_cast<double>(runs.size());
  avg.attempts_per_node =
      attempt_runs == 0 ? 0.0 : attempt_sum / static_cast<double>(attempt_runs);
  return avg;
}

Report build_report(const std::vector<RunSummary> &runs, const PriceTable &prices,
                    const std::optional<std::vector<GroundTruthLabel>> &labels) {
  if (runs.empty()) {
    throw EmptyInput("report needs at least one run");
  }
  Report r;
  r.runs = runs.size();
  for (const auto &run : runs) {
    const auto c = cost_report(run.calls, prices);
    r.cost_total.planner += c.planner;
    r.cost_total.executor += c.executor;
    r.cost_total.verifier += c.verifier;
    if (!run.status) {
      r.warnings.push_back("run " + run.run_id + " has no outcome event");
    }
  }
  r.cost_total.total = r.cost_total.planner + r.cost_total.executor + r.cost_total.verifier;
  const auto n = static_cast<double>(runs.size());
  r.cost_per_task = {r.cost_total.planner / n, r.cost_total.executor / n,
                     r.cost_total.verifier / n, r.cost_total.total / n};
  r.averages = run_averages(runs);
  r.vf = vf_profile(runs);

  if (labels) {
    std::map<std::string, bool> by_task;
    for (const auto &l : *labels) {
      by_task.emplace(l.task_id, l.final_answer_correct);
    }
    std::vector<LabeledOutcome> outcomes;
    for (const auto &run : runs) {
      auto it = by_task.find(run.task_id);
      if (it == by_task.end()) {
        r.warnings.push_back("run " + run.run_id + " (task \"" + run.task_id +
                             "\") has no label");
        continue;
      }
      outcomes.push_back({run.status == std::optional<std::string>("success"),
                          {run.task_id, it->second}});
    }
    r.labeled_runs = outcomes.size();
    if (outcomes.empty()) {
      r.warnings.push_back("no run matched a label; FP/FN rates omitted");
    } else {
      r.fp_fn = fp_fn_rates(outcomes);
    }
  }
  return r;
}

namespace {

ordered_json cost_json(const CostBreakdown &c) {
  return {{"planner", c.planner},
          {"executor", c.executor},
          {"verifier", c.verifier},
          {"total", c.total}};
}

ordered_json kind_json(const VfKindProfile &p) {
  return {{"avg_count_per_task", p.avg_count_per_task},
          {"avg_length_chars", p.avg_length_chars}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) {
    s.insert(0, width - s.size(), ' ');
  }
  return s;
}

} // namespace

ordered_json report_to_json(const Report &report) {
  ordered_json j;
  j["runs"] = report.runs;
  j["cost_usd"] = {{"total", cost_json(report.cost_total)},
                   {"per_task", cost_json(report.cost_per_task)}};
  j["averages"] = {{"iterations", report.averages.iterations},
                   {"attempts_per_node", report.averages.attempts_per_node}};
  j["vf_profile"] = {
      {"executions",
       {{"executable", kind_json(report.vf.executable)}, {"judge", kind_json(report.vf.judge)}}},
      {"distinct",
       {{"executable", kind_json(report.vf.distinct_executable)},
        {"judge", kind_json(report.vf.distinct_judge)}}}};
  if (report.fp_fn) {
    j["fp_fn"] = {{"labeled_runs", report.labeled_runs},
                  {"fp_rate", report.fp_fn->fp_rate},
                  {"fn_rate", report.fp_fn->fn_rate}};
  }
  if (!report.warnings.empty()) {
    j["warnings"] = report.warnings;
  }
  return j;
}

std::string report_to_text(const Report &report) {
  std::ostringstream out;
  out << "runs: " << report.runs << "\n\n";
  out << "cost (USD)    " << pad("total", 12) << pad("per task", 12) << "\n";
  const std::pair<const char *, double CostBreakdown::*> rows[] = {
      {"planner", &CostBreakdown::planner},
      {"executor", &CostBreakdown::executor},
      {"verifier", &CostBreakdown::verifier},
      {"total", &CostBreakdown::total},
  };
  for (const auto &[label, field] : rows) {
    std::string name = label;
    name.resize(14, ' ');
    out << name << pad(fixed(report.cost_total.*field, 6), 12)
        << pad(fixed(report.cost_per_task.*field, 6), 12) << "\n";
  }
  out << "\naverages\n";
  out << "  iterations per task   " << fixed(report.averages.iterations, 3) << "\n";
  out << "  attempts per node     " << fixed(report.averages.attempts_per_node, 3) << "\n";
  out << "\nVF profile    " << pad("count/task", 12) << pad("avg chars", 12) << "\n";
  const std::pair<const char *, const VfKindProfile *> vf_rows[] = {
      {"executable", &report.vf.executable},
      {"judge", &report.vf.judge},
      {"distinct exe", &report.vf.distinct_executable},
      {"distinct jdg", &report.vf.distinct_judge},
  };
  for (const auto &[label, p] : vf_rows) {
    std::string name = label;
    name.resize(14, ' ');
    out << name << pad(fixed(p->avg_count_per_task, 3), 12)
        << pad(fixed(p->avg_length_chars, 1), 12) << "\n";
  }
  if (report.fp_fn) {
    out << "\nFP/FN over " << report.labeled_runs << " labeled run(s)\n";
    out << "  false positive rate   " << fixed(report.fp_fn->fp_rate, 4) << "\n";
    out << "  false negative rate   " << fixed(report.fp_fn->fn_rate, 4) << "\n";
  }
  for (const auto &w : report.warnings) {
    out << "\nwarning: " << w;
  }
  if (!report.warnings.empty()) {
    out << "\n";
  }
  return out.str();
}

} // namespace veriflow
