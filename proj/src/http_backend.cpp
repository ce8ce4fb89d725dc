#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "veriflow/http_backend.h"

#include "veriflow/error.h"

#include <cstdlib>
#include <thread>

namespace veriflow {

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string &url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("base URL must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, ""};
  }
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') {
    path.pop_back();
  }
  return {url.substr(0, path_start), path};
}

bool retriable_status(int status) { return status == 429 || status >= 500; }

} // namespace

HttpBackendConfig HttpBackendConfig::from_env() { return from_env(HttpBackendConfig()); }

HttpBackendConfig HttpBackendConfig::from_env(HttpBackendConfig defaults) {
  if (const char *url = std::getenv("VERIMAP_BASE_URL"); url && *url) {
    defaults.base_url = url;
  }
  if (const char *key = std::getenv("VERIMAP_API_KEY"); key && *key) {
    defaults.api_key = key;
  }
  return defaults;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  std::tie(scheme_host_port_, path_prefix_) = split_base_url(config_.base_url);
  if (config_.max_attempts < 1) {
    config_.max_attempts = 1;
  }
  if (!config_.sleep) {
    config_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

nlohmann::json HttpBackend::build_payload(const ChatRequest &request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto &m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return {{"model", request.model_id},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"top_p", request.top_p}};
}

ChatResponse HttpBackend::parse_response(const nlohmann::json &body) {
  ChatResponse resp;
  try {
    const auto &message = body.at("choices").at(0).at("message");
    const auto &content = message.at("content");
    resp.content = content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw GatewayError(std::string("malformed chat completion response: ") +
                       e.what());
  }
  if (auto it = body.find("usage"); it != body.end() && it->is_object()) {
    resp.usage.input_tokens = it->value("prompt_tokens", std::uint64_t{0});
    resp.usage.output_tokens = it->value("completion_tokens", std::uint64_t{0});
    if (auto d = it->find("prompt_tokens_details");
        d != it->end() && d->is_object()) {
      resp.usage.cached_input_tokens = d->value("cached_tokens", std::uint64_t{0});
    }
    if (resp.usage.cached_input_tokens > resp.usage.input_tokens) {
      resp.usage.cached_input_tokens = resp.usage.input_tokens;
    }
  }
  return resp;
}

ChatResponse HttpBackend::complete(const ChatRequest &request) {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(
      config_.timeout);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  const std::string body = build_payload(request).dump();
  const std::string path = path_prefix_ + "/chat/completions";

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      config_.sleep(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("authentication rejected (HTTP " +
                      std::to_string(res->status) + ")");
    }
    if (retriable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw GatewayError("HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 500));
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error &e) {
      throw GatewayError(std::string("response is not JSON: ") + e.what());
    }
    return parse_response(parsed);
  }
  throw TransportError("chat completion failed after " +
                       std::to_string(config_.max_attempts) +
                       " attempts: " + last_error);
}

} // namespace veriflow
