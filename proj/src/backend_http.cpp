#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "emrc/backend.hpp"

namespace emrc {
namespace {

std::string snippet(const std::string& body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

}  // namespace

HttpBackend::HttpBackend(BackendSpec spec) : Backend(std::move(spec)) {
  const std::string& endpoint = this->spec().endpoint;
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("backend '" + id() + "': endpoint must include a scheme");
  }
  std::string scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http") {
    throw ConfigError("backend '" + id() + "': unsupported scheme '" + scheme +
                      "' (this build speaks plain http)");
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin_ = endpoint;
    path_ = "/";
  } else {
    origin_ = endpoint.substr(0, path_start);
    path_ = endpoint.substr(path_start);
  }
}

std::string HttpBackend::do_complete(const RenderedPrompt& prompt) {
  httplib::Headers headers;
  if (!spec().auth_env.empty()) {
    const char* token = std::getenv(spec().auth_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw ConfigError("backend '" + id() + "': environment variable " +
                        spec().auth_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  nlohmann::json request{
      {"model", spec().model},
      {"messages", nlohmann::json::array({nlohmann::json{
                       {"role", "user"}, {"content", prompt.text}}})},
      {"temperature", spec().temperature},
  };
  std::string body = request.dump();

  time_t timeout_sec = spec().timeout_ms / 1000;
  time_t timeout_usec = (spec().timeout_ms % 1000) * 1000;

  int attempts = 1 + spec().max_retries;
  std::string last_error;
  bool timed_out = false;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && spec().retry_backoff_ms > 0) {
      auto delay = std::chrono::milliseconds(spec().retry_backoff_ms << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_sec, timeout_usec);
    client.set_read_timeout(timeout_sec, timeout_usec);
    client.set_write_timeout(timeout_sec, timeout_usec);

    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      timed_out = result.error() == httplib::Error::ConnectionTimeout;
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      timed_out = false;
      continue;
    }
    if (result->status >= 400) {
      throw TransportError("backend '" + id() + "': HTTP " +
                           std::to_string(result->status) + ": " + snippet(result->body));
    }
    try {
      auto parsed = nlohmann::json::parse(result->body);
      return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& err) {
      throw TransportError("backend '" + id() + "': unexpected response shape: " +
                           std::string(err.what()) + ": " + snippet(result->body));
    }
  }
  std::string message = "backend '" + id() + "': " + last_error + " after " +
                        std::to_string(attempts) + " attempt(s)";
  if (timed_out) {
    throw TimeoutError(message);
  }
  throw TransportError(message);
}

}  // namespace emrc
