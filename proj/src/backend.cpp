#include "emrc/backend.hpp"

#include "emrc/util.hpp"

namespace emrc {
namespace {

constexpr std::string_view kWildcard = "*";

}  // namespace

std::string_view backend_kind_id(BackendKind kind) {
  switch (kind) {
    case BackendKind::Http: return "http";
    case BackendKind::Scripted: return "scripted";
  }
  return "";
}

BackendKind parse_backend_kind(const std::string& label) {
  if (label == "http") return BackendKind::Http;
  if (label == "scripted") return BackendKind::Scripted;
  throw ConfigError("unknown backend kind '" + label + "'");
}

void BackendSpec::validate() const {
  if (id.empty()) {
    throw ConfigError("backend id must not be empty");
  }
  if (kind == BackendKind::Http && endpoint.empty()) {
    throw ConfigError("backend '" + id + "': http backends need an endpoint");
  }
  if (timeout_ms <= 0) {
    throw ConfigError("backend '" + id + "': timeout_ms must be positive");
  }
  if (max_retries < 0) {
    throw ConfigError("backend '" + id + "': max_retries must be >= 0");
  }
  if (max_in_flight == 0) {
    throw ConfigError("backend '" + id + "': max_in_flight must be >= 1");
  }
  if (retry_backoff_ms < 0) {
    throw ConfigError("backend '" + id + "': retry_backoff_ms must be >= 0");
  }
}

BackendSpec backend_spec_from_json(const nlohmann::json& value) {
  if (!value.is_object()) {
    throw ConfigError("backend spec must be an object");
  }
  BackendSpec spec;
  spec.id = value.value("id", "");
  if (value.contains("kind")) {
    spec.kind = parse_backend_kind(value.at("kind").get<std::string>());
  }
  spec.endpoint = value.value("endpoint", "");
  spec.model = value.value("model", "");
  spec.auth_env = value.value("auth_env", "");
  spec.script = value.value("script", "");
  spec.timeout_ms = value.value("timeout_ms", spec.timeout_ms);
  spec.max_retries = value.value("max_retries", spec.max_retries);
  spec.max_in_flight = value.value("max_in_flight", spec.max_in_flight);
  spec.temperature = value.value("temperature", spec.temperature);
  spec.retry_backoff_ms = value.value("retry_backoff_ms", spec.retry_backoff_ms);
  if (value.contains("auth_token") || value.contains("api_key") ||
      value.contains("token")) {
    throw ConfigError("backend '" + spec.id +
                      "': credentials belong in the environment; set auth_env "
                      "to the variable name instead");
  }
  spec.validate();
  return spec;
}

nlohmann::json backend_spec_to_json(const BackendSpec& spec) {
  nlohmann::json out{
      {"id", spec.id},
      {"kind", std::string(backend_kind_id(spec.kind))},
      {"timeout_ms", spec.timeout_ms},
      {"max_retries", spec.max_retries},
      {"max_in_flight", spec.max_in_flight},
      {"temperature", spec.temperature},
      {"retry_backoff_ms", spec.retry_backoff_ms},
  };
  if (!spec.endpoint.empty()) out["endpoint"] = spec.endpoint;
  if (!spec.model.empty()) out["model"] = spec.model;
  if (!spec.auth_env.empty()) out["auth_env"] = spec.auth_env;
  if (!spec.script.empty()) out["script"] = spec.script;
  return out;
}

ScriptedBackend::ScriptedBackend(BackendSpec spec) : Backend(std::move(spec)) {
  if (!this->spec().script.empty()) {
    load_scenario(read_json_file(this->spec().script));
  }
}

void ScriptedBackend::add_reply(std::string template_name, std::string query_id,
                                std::string reply, bool sticky) {
  std::lock_guard lock(mutex_);
  steps_[{std::move(template_name), std::move(query_id)}].push_back(
      Step{std::move(reply), "", sticky});
}

void ScriptedBackend::add_error(std::string template_name, std::string query_id,
                                std::string kind, bool sticky) {
  std::lock_guard lock(mutex_);
  steps_[{std::move(template_name), std::move(query_id)}].push_back(
      Step{"", std::move(kind), sticky});
}

void ScriptedBackend::load_scenario(const nlohmann::json& scenario) {
  const nlohmann::json* steps = &scenario;
  if (scenario.is_object() && scenario.contains("steps")) {
    steps = &scenario.at("steps");
  }
  if (!steps->is_array()) {
    throw ConfigError("backend '" + id() + "': scenario must be a list of steps");
  }
  for (const auto& entry : *steps) {
    std::string template_name(kWildcard);
    std::string query_id(kWildcard);
    if (entry.contains("match")) {
      const auto& match = entry.at("match");
      template_name = match.value("template", template_name);
      query_id = match.value("query_id", query_id);
    }
    bool sticky = entry.value("sticky", false);
    if (entry.contains("error")) {
      add_error(template_name, query_id, entry.at("error").get<std::string>(), sticky);
    } else if (entry.contains("reply")) {
      add_reply(template_name, query_id, entry.at("reply").get<std::string>(), sticky);
    } else {
      throw ConfigError("backend '" + id() + "': step needs a reply or an error");
    }
  }
}

ScriptedBackend::Step ScriptedBackend::take_step(const RenderedPrompt& prompt) {
  std::lock_guard lock(mutex_);
  const Key candidates[] = {
      {prompt.template_name, prompt.query_id},
      {prompt.template_name, std::string(kWildcard)},
      {std::string(kWildcard), prompt.query_id},
      {std::string(kWildcard), std::string(kWildcard)},
  };
  for (const auto& key : candidates) {
    auto it = steps_.find(key);
    if (it == steps_.end()) continue;
    auto& cursor = cursor_[key];
    if (cursor >= it->second.size()) continue;
    Step step = it->second[cursor];
    if (!step.sticky) ++cursor;
    return step;
  }
  throw ScenarioExhaustedError("backend '" + id() + "' has no scripted step for template '" +
                               prompt.template_name + "', query '" + prompt.query_id + "'");
}

std::string ScriptedBackend::do_complete(const RenderedPrompt& prompt) {
  Step step = take_step(prompt);
  if (step.error == "timeout") {
    throw TimeoutError("backend '" + id() + "' scripted timeout");
  }
  if (!step.error.empty()) {
    throw TransportError("backend '" + id() + "' scripted " + step.error + " error");
  }
  return step.reply;
}

std::unique_ptr<Backend> make_backend(BackendSpec spec) {
  spec.validate();
  switch (spec.kind) {
    case BackendKind::Http: return std::make_unique<HttpBackend>(std::move(spec));
    case BackendKind::Scripted: return std::make_unique<ScriptedBackend>(std::move(spec));
  }
  throw ConfigError("unhandled backend kind");
}

BackendPool BackendPool::from_json(const nlohmann::json& config) {
  if (!config.is_object() || !config.contains("backends") ||
      !config.at("backends").is_array()) {
    throw ConfigError("pool config needs a top-level \"backends\" list");
  }
  BackendPool pool;
  for (const auto& entry : config.at("backends")) {
    pool.add(make_backend(backend_spec_from_json(entry)));
  }
  if (pool.empty()) {
    throw ConfigError("pool config lists no backends");
  }
  return pool;
}

BackendPool BackendPool::load(const std::string& path) {
  return from_json(read_json_file(path));
}

void BackendPool::add(std::unique_ptr<Backend> backend) {
  const std::string& id = backend->id();
  if (by_id_.count(id)) {
    throw ConfigError("duplicate backend id '" + id + "'");
  }
  by_id_[id] = backends_.size();
  backends_.push_back(std::move(backend));
}

bool BackendPool::contains(const std::string& id) const { return by_id_.count(id) > 0; }

Backend& BackendPool::get(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw BackendUnavailableError(id);
  }
  return *backends_[it->second];
}

std::vector<std::string> BackendPool::ids() const {
  std::vector<std::string> out;
  out.reserve(backends_.size());
  for (const auto& backend : backends_) out.push_back(backend->id());
  return out;
}

}  // namespace emrc
