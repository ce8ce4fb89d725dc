#include "veriflow/verifier.h"

#include "veriflow/error.h"
#include "veriflow/prompts.h"
#include "veriflow/text.h"

namespace veriflow {

namespace {

TokenUsage usage_since(const Gateway &gateway, std::size_t first_call) {
  TokenUsage total;
  const auto &calls = gateway.calls();
  for (std::size_t i = first_call; i < calls.size(); ++i) {
    total += calls[i].usage;
  }
  return total;
}

std::optional<JudgeVerdict> verdict_from(std::string_view candidate) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(candidate);
  } catch (const nlohmann::json::parse_error &) {
    return std::nullopt;
  }
  if (!j.is_object()) {
    return std::nullopt;
  }
  auto score = j.find("success_score");
  if (score == j.end() || !score->is_number_integer()) {
    return std::nullopt;
  }
  const auto value = score->get<int>();
  if (value != 0 && value != 1) {
    return std::nullopt;
  }
  JudgeVerdict v;
  v.success_score = value;
  if (auto r = j.find("reasoning"); r != j.end() && r->is_string()) {
    v.reasoning = r->get<std::string>();
  }
  return v;
}

} // namespace

std::optional<JudgeVerdict> parse_judge_verdict(std::string_view text) {
  const auto unfenced = strip_code_fence(text);
  if (auto v = verdict_from(unfenced)) {
    return v;
  }
  if (auto object = find_json_object(unfenced)) {
    return verdict_from(*object);
  }
  return std::nullopt;
}

VfResult run_executable_vf(Harness *harness, const VerificationSpec &spec,
                           const StructuredRecord &inputs,
                           const StructuredRecord &outputs, int timeout_s) {
  if (harness == nullptr) {
    throw HarnessUnavailable("no sandbox configured for executable VF \"" +
                             spec.name + "\"");
  }
  HarnessRequest req;
  req.mode = HarnessMode::vf;
  req.code = spec.payload;
  req.inputs = inputs.json();
  req.outputs = outputs.json();
  req.timeout_s = std::max(1, timeout_s);
  const auto resp = harness->evaluate(req);

  VfResult r{spec.name, VfKind::executable, resp.passed, {}, std::nullopt};
  if (!resp.passed) {
    if (resp.timed_out()) {
      r.feedback = "timeout";
    } else if (resp.traceback && !resp.traceback->empty()) {
      r.feedback = *resp.traceback;
    } else {
      r.feedback = resp.error_type.value_or("verification code failed");
    }
  }
  return r;
}

VfResult run_judge_vf(Gateway &gateway, const ToolRegistry &registry,
                      ToolContext &tool_ctx, const VerificationSpec &spec,
                      std::string_view agent_input, const StructuredRecord &output,
                      const VerifierConfig &cfg) {
  const auto first_call = gateway.calls().size();
  const auto agent_output = output.dump(2);
  std::vector<ChatMessage> messages{
      {Role::system, build_executor_system_prompt(registry)},
      {Role::user, prompts::render(prompts::Template::verifier,
                                   {{"agent_input", agent_input},
                                    {"verify_prompt", spec.payload},
                                    {"agent_output", agent_output}})},
  };

  std::optional<JudgeVerdict> verdict;
  bool reasked = false;
  ExecutorConfig loop_cfg{cfg.model_id, cfg.judge_round_cap, cfg.temperature,
                          cfg.top_p};
  const auto loop = run_agent_loop(
      gateway, Component::verifier, registry, tool_ctx, std::move(messages),
      loop_cfg, [&](const ReactStep &step, std::string_view raw) -> TurnDecision {
        const std::string_view candidate =
            step.kind == ReactStep::Kind::final_answer ? *step.answer : raw;
        verdict = parse_judge_verdict(candidate);
        if (verdict || reasked) {
          return {true, {}};
        }
        reasked = true;
        const std::string diagnostic =
            step.kind == ReactStep::Kind::malformed ? step.diagnostic
                                                    : "answer is not the verdict JSON";
        return {false, prompts::render(prompts::Template::judge_reask,
                                       {{"diagnostic", diagnostic}})};
      });

  VfResult r{spec.name, VfKind::judge, false, {}, usage_since(gateway, first_call)};
  if (verdict) {
    r.passed = verdict->success_score == 1;
    r.feedback = verdict->reasoning;
    if (!r.passed && r.feedback.empty()) {
      r.feedback = "judge returned success_score 0 without reasoning";
    }
  } else if (loop.stopped) {
    r.feedback = "verifier output unparseable";
  } else {
    r.feedback = "verifier gave no verdict within " +
                 std::to_string(cfg.judge_round_cap) + " rounds";
  }
  return r;
}

std::pair<bool, std::string> aggregate_verdicts(const std::vector<VfResult> &results) {
  bool passed = true;
  std::string bundle;
  for (const auto &r : results) {
    if (r.passed) {
      continue;
    }
    passed = false;
    if (!bundle.empty()) {
      bundle += "\n\n";
    }
    bundle += "VF " + r.vf_name + " failed:\n" + r.feedback;
  }
  return {passed, bundle};
}

std::string render_agent_input(const PlanNode &node, const StructuredRecord &inputs) {
  return "Subtask: " + node.name + "\nInstructions: " + node.instruction +
         "\nInputs: " + inputs.dump(2);
}

VerdictReport verify_node(const PlanNode &node, const StructuredRecord &inputs,
                          const StructuredRecord &outputs, VerifierDeps &deps) {
  VerdictReport report;
  for (const auto &vf : node.verification) {
    if (vf.kind == VfKind::executable) {
      report.results.push_back(
          run_executable_vf(deps.harness, vf, inputs, outputs, deps.cfg.vf_timeout_s));
    } else {
      if (deps.gateway == nullptr || deps.registry == nullptr ||
          deps.tool_ctx == nullptr) {
        throw std::invalid_argument("judge VF \"" + vf.name +
                                    "\" needs a gateway, registry and tool context");
      }
      report.results.push_back(run_judge_vf(*deps.gateway, *deps.registry,
                                            *deps.tool_ctx, vf,
                                            render_agent_input(node, inputs), outputs,
                                            deps.cfg));
    }
  }
  std::tie(report.passed, report.feedback_bundle) = aggregate_verdicts(report.results);
  return report;
}

VerdictReport verify_attempt(const PlanNode &node, const StructuredRecord &inputs,
                             const ExecutionResult &execution, VerifierDeps &deps) {
  if (execution.succeeded) {
    return verify_node(node, inputs, execution.outputs, deps);
  }
  VerdictReport report;
  report.results.push_back({kExecutionCheckName, VfKind::executable, false,
                            execution.error.value_or("execution failed"),
                            std::nullopt, true});
  std::tie(report.passed, report.feedback_bundle) = aggregate_verdicts(report.results);
  return report;
}

} // namespace veriflow
