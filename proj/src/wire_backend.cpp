#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "quorum/backends.hpp"
#include "quorum/errors.hpp"

namespace quorum::backends {

WireBackend::WireBackend(WireConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("wire backend: empty base_url");
  if (config_.model.empty()) throw ConfigError("wire backend: empty model");
}

std::string WireBackend::identity() const {
  return "openai:" + config_.model + "@" + config_.base_url;
}

Capabilities WireBackend::capabilities() const { return {true, true, true}; }

std::string WireBackend::complete(const CompletionRequest& request) {
  nlohmann::json body = {
      {"model", config_.model},
      {"messages",
       {{{"role", "user"}, {"content", request.prompt}}}},
      {"temperature", 0},
  };
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto backoff = std::chrono::milliseconds(
          static_cast<long long>(config_.backoff_base_ms) << (attempt - 1));
      std::this_thread::sleep_for(backoff);
    }
    // One client per call: keeps concurrent in-flight completions isolated.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
    client.set_read_timeout(config_.timeout_ms / 1000,
                            (config_.timeout_ms % 1000) * 1000);
    client.set_write_timeout(config_.timeout_ms / 1000,
                             (config_.timeout_ms % 1000) * 1000);

    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
      continue;  // transport error: retry
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;  // transient server state: retry
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransportError("wire backend: HTTP " + std::to_string(res->status) +
                           ": " + res->body);
    }
    try {
      const auto response = nlohmann::json::parse(res->body);
      return response.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("wire backend: malformed response: ") +
                           e.what());
    }
  }
  throw TransportError("wire backend: " + last_error + " after " +
                       std::to_string(config_.max_retries + 1) + " attempts");
}

}  // namespace quorum::backends
