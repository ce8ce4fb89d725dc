#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace veriflow {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  double top_p = 1.0;
};

struct TokenUsage {
  std::uint64_t input_tokens = 0;
  std::uint64_t cached_input_tokens = 0; // subset of input_tokens
  std::uint64_t output_tokens = 0;

  TokenUsage &operator+=(const TokenUsage &o) {
    input_tokens += o.input_tokens;
    cached_input_tokens += o.cached_input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  friend TokenUsage operator+(TokenUsage a, const TokenUsage &b) { return a += b; }
  friend bool operator==(const TokenUsage &, const TokenUsage &) = default;
};

struct ChatResponse {
  std::string content;
  TokenUsage usage;
};

// USD per one million tokens.
struct ModelPrice {
  double input = 0;
  double cached_input = 0;
  double output = 0;
};

class PriceTable {
public:
  void set(std::string model_id, ModelPrice price);
  bool contains(std::string_view model_id) const;
  const ModelPrice &at(std::string_view model_id) const; // throws UnknownModel
  const std::map<std::string, ModelPrice, std::less<>> &entries() const {
    return prices_;
  }

  // gpt-4o-mini and gpt-4.1 list prices used for cost reporting.
  static PriceTable defaults();
  // {"model": {"input": x, "cached_input": y, "output": z}, ...}
  static PriceTable from_json(const nlohmann::json &j);
  nlohmann::json to_json() const;

private:
  std::map<std::string, ModelPrice, std::less<>> prices_;
};

// usd = (input - cached) * p_in + cached * p_cached + output * p_out, per 1M.
double cost_of(const TokenUsage &usage, std::string_view model_id,
               const PriceTable &prices);

class Backend {
public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest &request) = 0;
  virtual std::string_view kind() const = 0;
};

// Replays pre-recorded completions in FIFO order. Usage is synthesized as
// ceil(chars / 4) tokens with no cached input.
class ScriptedBackend final : public Backend {
public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<std::string> responses);

  ChatResponse complete(const ChatRequest &request) override;
  std::string_view kind() const override { return "scripted"; }

  void enqueue(std::vector<std::string> responses);
  std::size_t remaining() const;
  // Every request received so far, in call order.
  std::vector<ChatRequest> received() const;

private:
  mutable std::mutex mu_;
  std::deque<std::string> queue_;
  std::vector<ChatRequest> received_;
};

// Throws WrongBackendKind unless `backend` is scripted.
void scripted_enqueue(Backend &backend, std::vector<std::string> responses);

std::uint64_t synthetic_token_count(std::size_t chars);

// Checks request invariants, then forwards to the backend.
ChatResponse complete(Backend &backend, const ChatRequest &request);

enum class Component { planner, executor, verifier };

std::string_view to_string(Component component);
Component component_from_string(std::string_view name);

struct CallRecord {
  Component component = Component::executor;
  std::string model_id;
  TokenUsage usage;
};

// Per-run handle over a (possibly shared) backend that tags and records
// the usage of each call.
class Gateway {
public:
  explicit Gateway(std::shared_ptr<Backend> backend);

  ChatResponse complete(Component component, const ChatRequest &request);

  const std::vector<CallRecord> &calls() const { return calls_; }
  Backend &backend() { return *backend_; }

private:
  std::shared_ptr<Backend> backend_;
  std::vector<CallRecord> calls_;
};

} // namespace veriflow
