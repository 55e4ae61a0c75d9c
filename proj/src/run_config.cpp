#include "emrc/run_config.hpp"

#include "emrc/util.hpp"

namespace emrc {
namespace {

void reject_unknown(const nlohmann::json& object, std::initializer_list<const char*> known,
                    const char* where) {
  for (const auto& [key, value] : object.items()) {
    bool ok = false;
    for (const char* candidate : known) {
      if (key == candidate) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError(std::string("unknown ") + where + " key '" + key + "'");
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  recruitment.validate();
  collab.validate();
  if (query_parallel == 0) {
    throw ConfigError("query_parallel must be >= 1");
  }
}

RunConfig run_config_from_json(const nlohmann::json& value, RunConfig base) {
  if (!value.is_object()) {
    throw ConfigError("run config must be a JSON object");
  }
  reject_unknown(value,
                 {"pool_path", "table_path", "aliases_path", "out_dir", "seed",
                  "query_parallel", "recruitment", "collab"},
                 "run config");
  RunConfig config = std::move(base);
  config.pool_path = value.value("pool_path", config.pool_path);
  config.table_path = value.value("table_path", config.table_path);
  config.aliases_path = value.value("aliases_path", config.aliases_path);
  config.out_dir = value.value("out_dir", config.out_dir);
  config.seed = value.value("seed", config.seed);
  config.query_parallel = value.value("query_parallel", config.query_parallel);
  if (value.contains("recruitment")) {
    const auto& r = value.at("recruitment");
    reject_unknown(r, {"beta", "n_agents", "classifier_override", "trust_labels"},
                   "recruitment");
    config.recruitment.beta = r.value("beta", config.recruitment.beta);
    config.recruitment.n_agents = r.value("n_agents", config.recruitment.n_agents);
    config.recruitment.classifier_override =
        r.value("classifier_override", config.recruitment.classifier_override);
    config.recruitment.trust_labels =
        r.value("trust_labels", config.recruitment.trust_labels);
  }
  if (value.contains("collab")) {
    const auto& c = value.at("collab");
    reject_unknown(c,
                   {"alpha", "layers", "aggregator_policy", "aggregator_id",
                    "drop_confidence", "drop_adversarial", "agent_parallel"},
                   "collab");
    config.collab.alpha = c.value("alpha", config.collab.alpha);
    config.collab.layers = c.value("layers", config.collab.layers);
    if (c.contains("aggregator_policy")) {
      config.collab.aggregator_policy =
          parse_aggregator_policy(c.at("aggregator_policy").get<std::string>());
    }
    config.collab.aggregator_id = c.value("aggregator_id", config.collab.aggregator_id);
    config.collab.drop_confidence =
        c.value("drop_confidence", config.collab.drop_confidence);
    config.collab.drop_adversarial =
        c.value("drop_adversarial", config.collab.drop_adversarial);
    config.collab.agent_parallel =
        c.value("agent_parallel", config.collab.agent_parallel);
  }
  config.validate();
  return config;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  return {
      {"pool_path", config.pool_path},
      {"table_path", config.table_path},
      {"aliases_path", config.aliases_path},
      {"out_dir", config.out_dir},
      {"seed", config.seed},
      {"query_parallel", config.query_parallel},
      {"recruitment",
       {{"beta", config.recruitment.beta},
        {"n_agents", config.recruitment.n_agents},
        {"classifier_override", config.recruitment.classifier_override},
        {"trust_labels", config.recruitment.trust_labels}}},
      {"collab",
       {{"alpha", config.collab.alpha},
        {"layers", config.collab.layers},
        {"aggregator_policy",
         std::string(aggregator_policy_id(config.collab.aggregator_policy))},
        {"aggregator_id", config.collab.aggregator_id},
        {"drop_confidence", config.collab.drop_confidence},
        {"drop_adversarial", config.collab.drop_adversarial},
        {"agent_parallel", config.collab.agent_parallel}}},
  };
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  return run_config_from_json(read_json_file(path), std::move(base));
}

}  // namespace emrc
