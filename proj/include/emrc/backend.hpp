#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emrc/concurrency.hpp"
#include "emrc/errors.hpp"

namespace emrc {

/// A fully rendered prompt plus the routing metadata scripted backends key on.
struct RenderedPrompt {
  std::string template_name;
  std::string query_id;
  std::string text;
};

enum class BackendKind { Http, Scripted };

std::string_view backend_kind_id(BackendKind kind);
BackendKind parse_backend_kind(const std::string& label);

struct BackendSpec {
  std::string id;
  BackendKind kind = BackendKind::Scripted;
  std::string endpoint;   // http only
  std::string model;      // http only
  std::string auth_env;   // name of the env var holding the bearer token
  std::string script;     // scripted only; path to a scenario file, may be empty
  std::int64_t timeout_ms = 60000;
  int max_retries = 2;
  std::size_t max_in_flight = 4;
  double temperature = 0.0;
  std::int64_t retry_backoff_ms = 250;

  void validate() const;
};

BackendSpec backend_spec_from_json(const nlohmann::json& value);
nlohmann::json backend_spec_to_json(const BackendSpec& spec);

/// One model endpoint. complete() serializes callers through the per-backend
/// in-flight cap; subclasses only implement the actual exchange.
class Backend {
 public:
  explicit Backend(BackendSpec spec)
      : spec_(std::move(spec)), limiter_(spec_.max_in_flight) {}
  virtual ~Backend() = default;

  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendSpec& spec() const { return spec_; }
  const std::string& id() const { return spec_.id; }

  std::string complete(const RenderedPrompt& prompt) {
    InflightLimiter::Permit permit(limiter_);
    return do_complete(prompt);
  }

 protected:
  virtual std::string do_complete(const RenderedPrompt& prompt) = 0;

 private:
  BackendSpec spec_;
  InflightLimiter limiter_;
};

/// Replays canned replies keyed on (template, query id). Steps with the same
/// key are consumed in order; sticky steps repeat forever. Lookup prefers the
/// most specific key and falls back through wildcards.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(BackendSpec spec);

  void add_reply(std::string template_name, std::string query_id, std::string reply,
                 bool sticky = false);
  void add_error(std::string template_name, std::string query_id, std::string kind,
                 bool sticky = false);
  void load_scenario(const nlohmann::json& scenario);

 protected:
  std::string do_complete(const RenderedPrompt& prompt) override;

 private:
  struct Step {
    std::string reply;
    std::string error;  // empty, "transport", or "timeout"
    bool sticky = false;
  };
  using Key = std::pair<std::string, std::string>;  // template, query id ("*" = any)

  Step take_step(const RenderedPrompt& prompt);

  std::map<Key, std::vector<Step>> steps_;
  std::map<Key, std::size_t> cursor_;
  std::mutex mutex_;
};

/// Talks to an OpenAI-style chat completions endpoint. Transport failures,
/// 429 and 5xx responses are retried with exponential backoff; other HTTP
/// errors fail immediately.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendSpec spec);

 protected:
  std::string do_complete(const RenderedPrompt& prompt) override;

 private:
  std::string origin_;
  std::string path_;
};

std::unique_ptr<Backend> make_backend(BackendSpec spec);

/// Calls the backend and runs `parse` on the reply, re-asking on ParseFailure
/// up to the backend's retry budget. The last failure propagates.
template <typename Parse>
auto complete_parsed(Backend& backend, const RenderedPrompt& prompt, Parse&& parse) {
  int attempts = 1 + backend.spec().max_retries;
  for (int attempt = 0;; ++attempt) {
    std::string raw = backend.complete(prompt);
    try {
      return parse(raw);
    } catch (const ParseFailure&) {
      if (attempt + 1 >= attempts) throw;
    }
  }
}

/// Owns the configured backends in file order.
class BackendPool {
 public:
  BackendPool() = default;

  static BackendPool from_json(const nlohmann::json& config);
  static BackendPool load(const std::string& path);

  void add(std::unique_ptr<Backend> backend);

  std::size_t size() const { return backends_.size(); }
  bool empty() const { return backends_.empty(); }
  bool contains(const std::string& id) const;
  Backend& get(const std::string& id) const;
  Backend& at(std::size_t index) const { return *backends_.at(index); }
  std::vector<std::string> ids() const;

 private:
  std::vector<std::unique_ptr<Backend>> backends_;
  std::map<std::string, std::size_t> by_id_;
};

}  // namespace emrc
