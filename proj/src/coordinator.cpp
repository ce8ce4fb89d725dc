#include "veriflow/coordinator.h"

#include "veriflow/error.h"
#include "veriflow/prompts.h"

#include <stdexcept>

namespace veriflow {

void CoordinatorConfig::validate() const {
  if (max_retries < 1) {
    throw std::invalid_argument("max_retries must be >= 1");
  }
  if (max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  if (executor_round_cap < 1) {
    throw std::invalid_argument("executor_round_cap must be >= 1");
  }
  if (verifier.judge_round_cap < 1) {
    throw std::invalid_argument("judge_round_cap must be >= 1");
  }
}

std::string_view to_string(TaskStatus status) {
  return status == TaskStatus::success ? "success" : "failure";
}

StructuredRecord compile_context(const Plan &plan, std::string_view node_id,
                                 const Blackboard &blackboard,
                                 std::string_view user_task,
                                 const std::optional<PriorAttempt> &prior) {
  auto ctx = resolve_input_refs(plan, node_id, blackboard, user_task);
  if (prior) {
    ordered_json previous = ordered_json::object();
    previous["outputs"] = prior->outputs ? prior->outputs->json() : ordered_json();
    previous["feedback"] = prior->feedback;
    ctx.set(kPreviousAttemptKey, std::move(previous));
  }
  return ctx;
}

ordered_json usage_payload(const std::vector<CallRecord> &calls) {
  ordered_json out = ordered_json::array();
  for (const auto &c : calls) {
    out.push_back({{"component", std::string(to_string(c.component))},
                   {"model", c.model_id},
                   {"input", c.usage.input_tokens},
                   {"cached", c.usage.cached_input_tokens},
                   {"output", c.usage.output_tokens}});
  }
  return out;
}

namespace {

class Emitter {
public:
  explicit Emitter(EventRecorder *rec) : rec_(rec) {}

  void operator()(int iteration, std::optional<std::string> node, EventKind kind,
                  ordered_json payload) const {
    if (rec_ != nullptr) {
      rec_->emit(iteration, std::move(node), kind, std::move(payload));
    }
  }

private:
  EventRecorder *rec_;
};

std::size_t payload_chars(const PlanNode &node, const VfResult &r) {
  for (const auto &vf : node.verification) {
    if (vf.name == r.vf_name) {
      return vf.payload.size();
    }
  }
  return 0;
}

void emit_attempt(const Emitter &emit, const PlanNode &node, const NodeAttempt &a) {
  for (const auto &entry : a.execution.transcript) {
    if (!entry.observation) {
      continue;
    }
    emit(a.iteration, node.id, EventKind::tool_call,
         {{"retry_index", a.retry_index},
          {"tool", *entry.step.action_name},
          {"input", *entry.step.action_input_json},
          {"is_error", entry.observation->is_error},
          {"observation", entry.observation->observation}});
  }
  for (const auto &r : a.verdict.results) {
    ordered_json p = {{"retry_index", a.retry_index},
                      {"vf", r.vf_name},
                      {"kind", std::string(to_string(r.kind))},
                      {"passed", r.passed},
                      {"feedback", r.feedback},
                      {"payload_chars", r.synthetic ? 0 : payload_chars(node, r)},
                      {"synthetic", r.synthetic}};
    emit(a.iteration, node.id, EventKind::vf_result, std::move(p));
  }
  ordered_json verdict = {{"retry_index", a.retry_index},
                          {"passed", a.verdict.passed},
                          {"rounds_used", a.execution.rounds_used},
                          {"outputs", a.execution.succeeded ? a.execution.outputs.json()
                                                            : ordered_json()},
                          {"feedback", a.verdict.feedback_bundle}};
  emit(a.iteration, node.id, EventKind::verdict, std::move(verdict));
}

double cost_since(const Gateway &gateway, std::size_t first_call,
                  const PriceTable *prices) {
  if (prices == nullptr) {
    return 0;
  }
  double total = 0;
  const auto &calls = gateway.calls();
  for (std::size_t i = first_call; i < calls.size(); ++i) {
    total += cost_of(calls[i].usage, calls[i].model_id, *prices);
  }
  return total;
}

} // namespace

TaskOutcome run_task(std::string_view task, const PlannerConfig &planner_cfg,
                     const CoordinatorConfig &coord_cfg, Gateway &gateway,
                     const ToolRegistry &registry, RunEnvironment &env) {
  coord_cfg.validate();
  const Emitter emit(env.events);
  const auto first_call = gateway.calls().size();

  ExecutorConfig exec_cfg{coord_cfg.executor_model, coord_cfg.executor_round_cap,
                          coord_cfg.temperature, coord_cfg.top_p};
  VerifierDeps deps{env.harness, &gateway, &registry, &env.tool_ctx, coord_cfg.verifier};

  TaskOutcome outcome;
  std::optional<FailureContext> failure;

  auto finish = [&](TaskStatus status, int iterations) {
    outcome.status = status;
    outcome.iterations_used = iterations;
    const auto &calls = gateway.calls();
    outcome.trace.calls.assign(calls.begin() + static_cast<std::ptrdiff_t>(first_call),
                               calls.end());
    outcome.total_cost_usd = cost_since(gateway, first_call, env.prices);
    emit(iterations, std::nullopt, EventKind::outcome,
         {{"task_id", env.task_id},
          {"status", std::string(to_string(status))},
          {"final_output", outcome.final_output ? outcome.final_output->json()
                                                : ordered_json()},
          {"iterations", iterations},
          {"plans_generated", outcome.trace.plans_generated()},
          {"cost_usd", outcome.total_cost_usd},
          {"error", outcome.error ? ordered_json(*outcome.error) : ordered_json()},
          {"usage", usage_payload(outcome.trace.calls)}});
    return std::move(outcome);
  };

  for (int iteration = 1; iteration <= coord_cfg.max_iterations; ++iteration) {
    outcome.trace.iterations.push_back({});
    const auto it_index = outcome.trace.iterations.size() - 1;
    outcome.trace.iterations[it_index].iteration = iteration;

    Plan plan;
    try {
      plan = generate_plan(gateway, planner_cfg, task, failure);
    } catch (const PlanGenerationFailed &e) {
      outcome.trace.iterations[it_index].error = e.what();
      outcome.error = std::string("PlanGenerationFailed: ") + e.what();
      return finish(TaskStatus::failure, iteration);
    }
    {
      auto &it = outcome.trace.iterations[it_index];
      it.plan = plan;
      it.plan_json = serialize_plan(plan);
      emit(iteration, std::nullopt, EventKind::plan_generated,
           {{"plan", plan_to_json(plan)}, {"final_node", plan.final_node_id}});
    }

    Blackboard blackboard;
    std::optional<std::string> failed_node;
    for (const auto &node_id : topological_order(plan)) {
      const auto &node = plan.node(node_id);
      const auto inputs = resolve_input_refs(plan, node_id, blackboard, task);
      std::optional<PriorAttempt> prior;
      bool passed = false;

      for (int r = 0; r < coord_cfg.max_retries && !passed; ++r) {
        NodeAttempt a;
        a.node_id = node_id;
        a.iteration = iteration;
        a.retry_index = r;
        a.inputs = inputs;
        a.context = compile_context(plan, node_id, blackboard, task, prior);
        emit(iteration, node_id, EventKind::attempt_started,
             {{"retry_index", r},
              {"context_sha256", prompts::sha256_hex(a.context.dump())},
              {"context_keys", a.context.names()}});

        a.execution = run_subtask(gateway, registry, env.tool_ctx, node, a.context,
                                  exec_cfg);
        a.verdict = verify_attempt(node, a.inputs, a.execution, deps);
        emit_attempt(emit, node, a);

        passed = a.verdict.passed;
        if (passed) {
          blackboard.insert_or_assign(node_id, a.execution.outputs);
        } else {
          prior = PriorAttempt{a.execution.succeeded
                                   ? std::optional(a.execution.outputs)
                                   : std::nullopt,
                               a.verdict.feedback_bundle};
        }
        outcome.trace.iterations[it_index].attempts.push_back(std::move(a));
      }
      if (!passed) {
        failed_node = node_id;
        break;
      }
    }

    if (!failed_node) {
      outcome.final_output = blackboard.at(plan.final_node_id);
      return finish(TaskStatus::success, iteration);
    }

    outcome.trace.iterations[it_index].failed_node = *failed_node;
    if (iteration == coord_cfg.max_iterations) {
      outcome.error = "node \"" + *failed_node + "\" failed " +
                      std::to_string(coord_cfg.max_retries) +
                      " attempt(s) in the last of " +
                      std::to_string(coord_cfg.max_iterations) + " iteration(s)";
      return finish(TaskStatus::failure, iteration);
    }
    failure = extract_failure_context(plan, outcome.trace, *failed_node);
    emit(iteration, *failed_node, EventKind::replanned,
         {{"failed_node", *failed_node},
          {"next_iteration", iteration + 1},
          {"excerpt_chars", failure->trace_excerpt.size()}});
  }
  // Unreachable: the last iteration always returns.
  throw std::logic_error("coordinator loop exited without an outcome");
}

} // namespace veriflow
