#include "veriflow/executor.h"

#include "veriflow/error.h"
#include "veriflow/prompts.h"
#include "veriflow/text.h"

#include <algorithm>

namespace veriflow {

namespace {

struct Marker {
  enum class Type { thought, action, action_input, answer, observation };
  Type type;
  std::size_t begin;   // start of the marker label
  std::size_t content; // first byte after the colon
};

// Markers recognized at the start of a line (leading blanks allowed).
std::vector<Marker> scan_markers(std::string_view text) {
  static constexpr std::pair<std::string_view, Marker::Type> kLabels[] = {
      {"Thought:", Marker::Type::thought},
      {"Action Input:", Marker::Type::action_input},
      {"Action:", Marker::Type::action},
      {"Answer:", Marker::Type::answer},
      {"Observation:", Marker::Type::observation},
  };
  std::vector<Marker> out;
  std::size_t line = 0;
  while (line <= text.size()) {
    std::size_t p = line;
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) {
      ++p;
    }
    for (const auto &[label, type] : kLabels) {
      if (text.substr(p).starts_with(label)) {
        out.push_back({type, p, p + label.size()});
        break;
      }
    }
    const auto nl = text.find('\n', line);
    if (nl == std::string_view::npos) {
      break;
    }
    line = nl + 1;
  }
  return out;
}

// Text from `m.content` up to the next marker (or the end).
std::string_view section(std::string_view text, const std::vector<Marker> &markers,
                         std::size_t index) {
  const auto start = markers[index].content;
  const auto end =
      index + 1 < markers.size() ? markers[index + 1].begin : text.size();
  return trim(text.substr(start, end - start));
}

ReactStep malformed(std::string thought, std::string diagnostic) {
  ReactStep s;
  s.kind = ReactStep::Kind::malformed;
  s.thought = std::move(thought);
  s.diagnostic = std::move(diagnostic);
  return s;
}

// Drops anything from a hallucinated "Observation:" onward.
std::string without_observation(std::string_view raw) {
  const auto markers = scan_markers(raw);
  for (const auto &m : markers) {
    if (m.type == Marker::Type::observation) {
      return std::string(trim(raw.substr(0, m.begin)));
    }
  }
  return std::string(trim(raw));
}

} // namespace

std::string_view to_string(ReactStep::Kind kind) {
  switch (kind) {
  case ReactStep::Kind::action:
    return "action";
  case ReactStep::Kind::final_answer:
    return "final_answer";
  case ReactStep::Kind::malformed:
    return "malformed";
  }
  return "malformed";
}

ReactStep parse_react_step(std::string_view completion) {
  std::string unfenced;
  std::string_view text = trim(completion);
  if (text.starts_with("```")) {
    unfenced = strip_code_fence(text);
    text = unfenced;
  }
  const auto markers = scan_markers(text);

  std::string thought;
  std::optional<std::size_t> first_action;
  std::optional<std::size_t> first_answer;
  std::optional<std::size_t> last_answer;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    switch (markers[i].type) {
    case Marker::Type::thought:
      if (thought.empty()) {
        thought = std::string(section(text, markers, i));
      }
      break;
    case Marker::Type::action:
      if (!first_action) {
        first_action = i;
      }
      break;
    case Marker::Type::answer:
      if (!first_answer) {
        first_answer = i;
      }
      last_answer = i;
      break;
    default:
      break;
    }
  }

  const bool action_first =
      first_action && (!first_answer || markers[*first_action].begin <
                                             markers[*first_answer].begin);
  if (action_first) {
    auto name = section(text, markers, *first_action);
    name = trim(name.substr(0, name.find('\n')));
    if (name.empty()) {
      return malformed(thought, "\"Action:\" names no tool");
    }
    std::optional<std::size_t> input_at;
    for (std::size_t i = *first_action + 1; i < markers.size(); ++i) {
      if (markers[i].type == Marker::Type::action_input) {
        input_at = i;
        break;
      }
      if (markers[i].type == Marker::Type::action) {
        break;
      }
    }
    if (!input_at) {
      return malformed(thought, "\"Action:\" without \"Action Input:\"");
    }
    // The JSON may span lines; stop at a hallucinated observation.
    auto rest = text.substr(markers[*input_at].content);
    for (std::size_t i = *input_at + 1; i < markers.size(); ++i) {
      if (markers[i].type == Marker::Type::observation) {
        rest = text.substr(markers[*input_at].content,
                           markers[i].begin - markers[*input_at].content);
        break;
      }
    }
    const auto object = find_json_object(rest);
    if (!object) {
      return malformed(thought, "\"Action Input:\" is not a JSON object");
    }
    if (!nlohmann::json::accept(*object)) {
      return malformed(thought, "\"Action Input:\" is not valid JSON");
    }
    ReactStep s;
    s.kind = ReactStep::Kind::action;
    s.thought = std::move(thought);
    s.action_name = std::string(name);
    s.action_input_json = std::string(*object);
    return s;
  }

  if (last_answer) {
    const auto body = section(text, markers, *last_answer);
    if (body.empty()) {
      return malformed(thought, "\"Answer:\" is empty");
    }
    ReactStep s;
    s.kind = ReactStep::Kind::final_answer;
    s.thought = std::move(thought);
    s.answer = std::string(body);
    return s;
  }
  return malformed(thought, "no \"Action:\" or \"Answer:\" found");
}

StructuredRecord extract_structured_output(std::string_view answer,
                                           const std::vector<std::string> &expected_vars) {
  const auto body = strip_code_fence(answer);
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(body);
  } catch (const nlohmann::json::parse_error &e) {
    throw StructuredOutputError(std::string("answer is not valid JSON: ") + e.what());
  }
  if (!parsed.is_object()) {
    throw StructuredOutputError("answer is not a JSON object");
  }
  std::vector<std::string> missing;
  for (const auto &v : expected_vars) {
    if (!parsed.contains(v)) {
      missing.push_back(v);
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto &m : missing) {
      names += (names.empty() ? "" : ", ") + m;
    }
    throw StructuredOutputError("answer is missing output variable(s): " + names,
                                std::move(missing));
  }
  return StructuredRecord::from_json(parsed);
}

std::string build_executor_system_prompt(const ToolRegistry &registry) {
  const auto tools = registry.render_descriptions();
  return prompts::render(prompts::Template::executor_system, {{"tool_desc", tools}});
}

std::string build_executor_task_prompt(const PlanNode &node,
                                       const StructuredRecord &context) {
  const auto contexts = context.dump(2);
  const auto outputs = ordered_json(node.outputs).dump();
  return prompts::render(prompts::Template::executor_task,
                         {{"subtask", node.name},
                          {"instruction", node.instruction},
                          {"contexts", contexts}}) +
         prompts::render(prompts::Template::executor_output_guide,
                         {{"output_vars", outputs}});
}

AgentLoopResult run_agent_loop(Gateway &gateway, Component component,
                               const ToolRegistry &registry, ToolContext &tool_ctx,
                               std::vector<ChatMessage> messages,
                               const ExecutorConfig &cfg, const TurnHandler &on_turn) {
  AgentLoopResult result;
  ChatRequest request;
  request.model_id = cfg.model_id;
  request.temperature = cfg.temperature;
  request.top_p = cfg.top_p;
  request.messages = std::move(messages);

  while (result.rounds_used < cfg.round_cap) {
    const auto response = gateway.complete(component, request);
    ++result.rounds_used;
    TranscriptEntry entry{response.content, parse_react_step(response.content),
                          std::nullopt};

    if (entry.step.kind == ReactStep::Kind::action) {
      auto observed = registry.invoke(*entry.step.action_name,
                                      *entry.step.action_input_json, tool_ctx);
      request.messages.push_back(
          {Role::assistant, without_observation(response.content)});
      request.messages.push_back({Role::user, "Observation: " + observed.observation});
      entry.observation = std::move(observed);
      result.transcript.push_back(std::move(entry));
      continue;
    }

    const auto decision = on_turn(entry.step, response.content);
    result.transcript.push_back(std::move(entry));
    if (decision.stop) {
      result.stopped = true;
      return result;
    }
    request.messages.push_back({Role::assistant, response.content});
    request.messages.push_back({Role::user, decision.reply});
  }
  return result;
}

ExecutionResult run_subtask(Gateway &gateway, const ToolRegistry &registry,
                            ToolContext &tool_ctx, const PlanNode &node,
                            const StructuredRecord &context,
                            const ExecutorConfig &cfg) {
  std::vector<ChatMessage> messages{
      {Role::system, build_executor_system_prompt(registry)},
      {Role::user, build_executor_task_prompt(node, context)},
  };
  auto loop = run_agent_loop(
      gateway, Component::executor, registry, tool_ctx, std::move(messages), cfg,
      [](const ReactStep &step, std::string_view) -> TurnDecision {
        if (step.kind == ReactStep::Kind::final_answer) {
          return {true, {}};
        }
        return {false, prompts::render(prompts::Template::executor_reformat,
                                       {{"diagnostic", step.diagnostic}})};
      });

  ExecutionResult result;
  result.rounds_used = loop.rounds_used;
  result.transcript = std::move(loop.transcript);
  if (!loop.stopped) {
    result.error = "no final answer within " + std::to_string(cfg.round_cap) +
                   " rounds";
    return result;
  }
  try {
    result.outputs =
        extract_structured_output(*result.transcript.back().step.answer, node.outputs);
    result.succeeded = true;
  } catch (const StructuredOutputError &e) {
    result.error = std::string("StructuredOutputError: ") + e.what();
  }
  return result;
}

} // namespace veriflow
