#include "veriflow/planner.h"

#include "veriflow/error.h"
#include "veriflow/prompts.h"

#include <deque>
#include <map>
#include <set>
#include <stdexcept>

namespace veriflow {

std::string build_planning_prompt(std::string_view task, const PlannerConfig &cfg) {
  if (task.empty()) {
    throw std::invalid_argument("planning task is empty");
  }
  const std::string_view demo =
      cfg.demo_example ? std::string_view(*cfg.demo_example) : std::string_view();
  return prompts::render(prompts::Template::planner,
                         {{"available_tools", cfg.tool_descriptions},
                          {"task_instruction", task},
                          {"demo_example", demo}});
}

std::string build_replanning_prompt(std::string_view base_prompt,
                                    const FailureContext &fc) {
  std::string out(base_prompt);
  out += "\n\n";
  out += prompts::render(prompts::Template::replanner,
                         {{"previous_dag_str", fc.previous_plan_json},
                          {"failed_context", fc.trace_excerpt}});
  return out;
}

std::vector<std::pair<std::string, int>> ancestors_within(const Plan &plan,
                                                          std::string_view node_id,
                                                          int max_depth) {
  (void)plan.node(node_id);
  std::map<std::string, int, std::less<>> depth{{std::string(node_id), 0}};
  std::deque<std::string> queue{std::string(node_id)};
  while (!queue.empty()) {
    const auto current = queue.front();
    queue.pop_front();
    const int d = depth.at(current);
    if (d == max_depth) {
      continue;
    }
    for (const auto &e : plan.edges) {
      if (e.to == current && plan.find(e.from) && !depth.contains(e.from)) {
        depth.emplace(e.from, d + 1);
        queue.push_back(e.from);
      }
    }
  }
  std::vector<std::pair<std::string, int>> out;
  for (int d = 1; d <= max_depth; ++d) {
    for (const auto &n : plan.nodes) {
      auto it = depth.find(n.id);
      if (it != depth.end() && it->second == d) {
        out.emplace_back(n.id, d);
      }
    }
  }
  return out;
}

namespace {

std::string describe_output(const NodeAttempt &a) {
  if (a.execution.succeeded) {
    return a.execution.outputs.dump(2);
  }
  return "none (" + a.execution.error.value_or("execution failed") + ")";
}

std::string failed_node_section(const PlanNode &node, const NodeAttempt &a) {
  std::string s = "Failed node: " + node.id + " (" + node.name + ")\n";
  s += "Instruction: " + node.instruction + "\n";
  s += "Inputs: " + a.inputs.dump(2) + "\n";
  s += "Last output (attempt " + std::to_string(a.retry_index + 1) +
       "): " + describe_output(a) + "\n";
  s += "Verification failures:";
  for (const auto &r : a.verdict.results) {
    if (!r.passed) {
      s += "\n- " + r.vf_name + ": " + r.feedback;
    }
  }
  return s;
}

std::string ancestor_section(const PlanNode &node, int distance, const NodeAttempt *a) {
  std::string s = "Ancestor " + node.id + " (" + node.name + ", " +
                  (distance == 1 ? "parent" : "grandparent") + ")\n";
  s += "Instruction: " + node.instruction + "\n";
  if (a == nullptr) {
    s += "Not executed in this iteration.";
    return s;
  }
  s += "Inputs: " + a->inputs.dump(2) + "\n";
  s += "Output: " + describe_output(*a);
  return s;
}

} // namespace

FailureContext extract_failure_context(const Plan &plan, const TaskTrace &trace,
                                       std::string_view failed_node) {
  const auto &node = plan.node(failed_node);
  if (trace.iterations.empty()) {
    throw std::invalid_argument("trace has no iterations");
  }
  const int iteration = trace.iterations.back().iteration;
  const auto *last = trace.last_attempt(iteration, failed_node);
  if (last == nullptr) {
    throw std::invalid_argument("no attempt recorded for node \"" +
                                std::string(failed_node) + "\"");
  }

  std::string excerpt = failed_node_section(node, *last);
  for (const auto &[id, distance] : ancestors_within(plan, failed_node, 2)) {
    excerpt += "\n\n" +
               ancestor_section(plan.node(id), distance, trace.last_attempt(iteration, id));
  }
  if (excerpt.size() > kFailureExcerptLimit) {
    static constexpr std::string_view kCut = "\n[truncated]";
    excerpt.resize(kFailureExcerptLimit - kCut.size());
    excerpt += kCut;
  }
  return {serialize_plan(plan), std::string(failed_node), std::move(excerpt)};
}

namespace {

std::vector<std::string> describe_violations(const ValidationReport &report) {
  std::vector<std::string> out;
  for (const auto &v : report.violations) {
    std::string line = v.code;
    if (v.node_id) {
      line += " (" + *v.node_id + ")";
    }
    out.push_back(line + ": " + v.message);
  }
  return out;
}

} // namespace

Plan generate_plan(Gateway &gateway, const PlannerConfig &cfg, std::string_view task,
                   const std::optional<FailureContext> &fc) {
  if (cfg.max_parse_retries < 0) {
    throw std::invalid_argument("max_parse_retries must be >= 0");
  }
  auto prompt = build_planning_prompt(task, cfg);
  if (fc) {
    prompt = build_replanning_prompt(prompt, *fc);
  }
  ChatRequest request;
  request.model_id = cfg.model_id;
  request.temperature = cfg.temperature;
  request.top_p = cfg.top_p;
  request.messages.push_back({Role::user, std::move(prompt)});

  std::vector<std::string> problems;
  for (int attempt = 0; attempt <= cfg.max_parse_retries; ++attempt) {
    const auto response = gateway.complete(Component::planner, request);
    try {
      auto plan = parse_plan(response.content);
      const auto report = validate_plan(plan);
      if (report.ok) {
        return plan;
      }
      problems = describe_violations(report);
    } catch (const ParseError &e) {
      problems = {std::string("ParseError: ") + e.what()};
    }
    std::string listed;
    for (const auto &p : problems) {
      listed += (listed.empty() ? "- " : "\n- ") + p;
    }
    request.messages.push_back({Role::assistant, response.content});
    request.messages.push_back(
        {Role::user, prompts::render(prompts::Template::planner_reask,
                                     {{"violations", listed}})});
  }
  throw PlanGenerationFailed("planner produced no valid plan in " +
                                 std::to_string(cfg.max_parse_retries + 1) + " attempt(s)",
                             std::move(problems));
}

} // namespace veriflow
