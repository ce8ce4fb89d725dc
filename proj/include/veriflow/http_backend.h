#pragma once

#include "veriflow/gateway.h"

#include <chrono>
#include <functional>
#include <string>

namespace veriflow {

struct HttpBackendConfig {
  // e.g. "https://api.openai.com/v1"; "/chat/completions" is appended.
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::seconds timeout{120};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  // Replaceable so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;

  // Fills base_url / api_key from VERIMAP_BASE_URL / VERIMAP_API_KEY when set.
  static HttpBackendConfig from_env(HttpBackendConfig defaults);
  static HttpBackendConfig from_env();
};

// OpenAI-compatible chat-completions client. Retries connection failures,
// HTTP 429 and 5xx with exponential backoff; 401/403 raise AuthError.
class HttpBackend final : public Backend {
public:
  explicit HttpBackend(HttpBackendConfig config);

  ChatResponse complete(const ChatRequest &request) override;
  std::string_view kind() const override { return "http"; }

  static nlohmann::json build_payload(const ChatRequest &request);
  static ChatResponse parse_response(const nlohmann::json &body);

private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

} // namespace veriflow
