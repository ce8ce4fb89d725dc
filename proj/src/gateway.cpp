#include "veriflow/gateway.h"

#include "veriflow/error.h"

namespace veriflow {

std::string_view to_string(Role role) {
  switch (role) {
  case Role::system:
    return "system";
  case Role::user:
    return "user";
  case Role::assistant:
    return "assistant";
  }
  return "user";
}

void PriceTable::set(std::string model_id, ModelPrice price) {
  if (price.input < 0 || price.cached_input < 0 || price.output < 0) {
    throw std::invalid_argument("negative price for model " + model_id);
  }
  prices_[std::move(model_id)] = price;
}

bool PriceTable::contains(std::string_view model_id) const {
  return prices_.find(model_id) != prices_.end();
}

const ModelPrice &PriceTable::at(std::string_view model_id) const {
  auto it = prices_.find(model_id);
  if (it == prices_.end()) {
    throw UnknownModel("no price entry for model \"" + std::string(model_id) +
                       "\"");
  }
  return it->second;
}

PriceTable PriceTable::defaults() {
  PriceTable t;
  t.set("gpt-4o-mini", {0.15, 0.08, 0.60});
  t.set("gpt-4.1", {2.00, 0.50, 8.00});
  return t;
}

PriceTable PriceTable::from_json(const nlohmann::json &j) {
  if (!j.is_object()) {
    throw std::invalid_argument("price table must be a JSON object");
  }
  PriceTable t;
  for (const auto &[model, p] : j.items()) {
    t.set(model, {p.at("input").get<double>(),
                  p.value("cached_input", p.at("input").get<double>()),
                  p.at("output").get<double>()});
  }
  return t;
}

nlohmann::json PriceTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto &[model, p] : prices_) {
    j[model] = {{"input", p.input},
                {"cached_input", p.cached_input},
                {"output", p.output}};
  }
  return j;
}

double cost_of(const TokenUsage &usage, std::string_view model_id,
               const PriceTable &prices) {
  const auto &p = prices.at(model_id);
  if (usage.cached_input_tokens > usage.input_tokens) {
    throw std::invalid_argument("cached input tokens exceed input tokens");
  }
  const auto uncached = usage.input_tokens - usage.cached_input_tokens;
  return (static_cast<double>(uncached) * p.input +
          static_cast<double>(usage.cached_input_tokens) * p.cached_input +
          static_cast<double>(usage.output_tokens) * p.output) /
         1e6;
}

std::uint64_t synthetic_token_count(std::size_t chars) {
  return (chars + 3) / 4;
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) {
  enqueue(std::move(responses));
}

void ScriptedBackend::enqueue(std::vector<std::string> responses) {
  std::lock_guard lock(mu_);
  for (auto &r : responses) {
    queue_.push_back(std::move(r));
  }
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

std::vector<ChatRequest> ScriptedBackend::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

ChatResponse ScriptedBackend::complete(const ChatRequest &request) {
  std::lock_guard lock(mu_);
  received_.push_back(request);
  if (queue_.empty()) {
    throw ScriptExhausted("scripted backend has no responses left (call " +
                          std::to_string(received_.size()) + ")");
  }
  ChatResponse resp;
  resp.content = std::move(queue_.front());
  queue_.pop_front();

  std::size_t prompt_chars = 0;
  for (const auto &m : request.messages) {
    prompt_chars += m.content.size();
  }
  resp.usage.input_tokens = synthetic_token_count(prompt_chars);
  resp.usage.output_tokens = synthetic_token_count(resp.content.size());
  return resp;
}

void scripted_enqueue(Backend &backend, std::vector<std::string> responses) {
  auto *scripted = dynamic_cast<ScriptedBackend *>(&backend);
  if (scripted == nullptr) {
    throw WrongBackendKind("cannot enqueue responses on a " +
                           std::string(backend.kind()) + " backend");
  }
  scripted->enqueue(std::move(responses));
}

ChatResponse complete(Backend &backend, const ChatRequest &request) {
  if (request.messages.empty()) {
    throw GatewayError("chat request has no messages");
  }
  if (request.temperature < 0 || request.temperature > 2 || request.top_p < 0 ||
      request.top_p > 2) {
    throw GatewayError("temperature and top_p must lie in [0, 2]");
  }
  return backend.complete(request);
}

std::string_view to_string(Component component) {
  switch (component) {
  case Component::planner:
    return "planner";
  case Component::executor:
    return "executor";
  case Component::verifier:
    return "verifier";
  }
  return "executor";
}

Component component_from_string(std::string_view name) {
  if (name == "planner") {
    return Component::planner;
  }
  if (name == "executor") {
    return Component::executor;
  }
  if (name == "verifier") {
    return Component::verifier;
  }
  throw std::invalid_argument("unknown component \"" + std::string(name) + "\"");
}

Gateway::Gateway(std::shared_ptr<Backend> backend) : backend_(std::move(backend)) {
  if (!backend_) {
    throw std::invalid_argument("gateway requires a backend");
  }
}

ChatResponse Gateway::complete(Component component, const ChatRequest &request) {
  auto resp = veriflow::complete(*backend_, request);
  calls_.push_back({component, request.model_id, resp.usage});
  return resp;
}

} // namespace veriflow
