#include "emrc/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "emrc/expertise.hpp"
#include "emrc/util.hpp"

namespace emrc {
namespace {

nlohmann::json config_to_json(const EvalConfig& config) {
  return {
      {"strategy", std::string(recruit_strategy_id(config.strategy))},
      {"random_mode", std::string(random_mode_id(config.random_mode))},
      {"seed", config.seed},
      {"k", config.k},
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

/// Corpus-wide answering strength: department cells averaged with their
/// supports as weights.
std::map<std::string, double> task_scores(const ExpertiseTable& table) {
  std::map<std::string, double> scores;
  for (const auto& [id, profile] : table.profiles) {
    double weighted = 0.0;
    double support = 0.0;
    for (std::size_t d = 0; d < kDepartmentCount; ++d) {
      weighted += profile.dept_acc[d] * static_cast<double>(profile.dept_support[d]);
      support += static_cast<double>(profile.dept_support[d]);
    }
    scores[id] = support > 0.0 ? weighted / support : 0.0;
  }
  return scores;
}

/// Labels when the record has them, otherwise a fixed placeholder; the
/// recruitment ablations never act on the classification.
ClassificationPrediction classification_or_default(const QueryRecord& query) {
  if (query.labeled()) {
    return {*query.dept_label, *query.diff_label};
  }
  return {Department::InternalMedicine, Difficulty::Medium};
}

RecruitmentResult ablation_recruitment(const QueryRecord& query,
                                       const ExpertiseTable& table,
                                       const EvalConfig& config,
                                       const std::vector<std::string>& fixed_set) {
  RecruitmentResult result;
  result.query_id = query.id;
  result.classification = classification_or_default(query);
  if (config.strategy == RecruitStrategy::TaskTopK) {
    result.classifier_id = std::string(kTaskTopClassifierId);
    result.scores = task_scores(table);
    result.recruited = fixed_set;
  } else {
    result.classifier_id = std::string(kRandomClassifierId);
    result.recruited =
        config.random_mode == RandomMode::PerRun
            ? fixed_set
            : random_k(table, config.set_size(), config.seed ^ fnv1a64(query.id));
  }
  return result;
}

PerQueryResult result_from_transcript(const QueryRecord& query,
                                      const CollabTranscript& transcript) {
  PerQueryResult row;
  row.query_id = query.id;
  row.subject = query.subject;
  row.gold = query.gold;
  row.answer = transcript.final.answer;
  row.correct = query.gold && *query.gold == transcript.final.answer;
  row.dept = std::string(department_code(transcript.recruitment.classification.dept));
  row.diff = std::string(difficulty_id(transcript.recruitment.classification.diff));
  row.classifier_id = transcript.recruitment.classifier_id;
  row.recruited = transcript.recruitment.recruited;
  row.fallback = transcript.final.fallback;
  return row;
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

}  // namespace

std::string_view recruit_strategy_id(RecruitStrategy strategy) {
  switch (strategy) {
    case RecruitStrategy::ExpertiseAware: return "expertise";
    case RecruitStrategy::RandomK: return "random";
    case RecruitStrategy::TaskTopK: return "task_top";
  }
  return "";
}

RecruitStrategy parse_recruit_strategy(const std::string& label) {
  if (label == "expertise") return RecruitStrategy::ExpertiseAware;
  if (label == "random") return RecruitStrategy::RandomK;
  if (label == "task_top") return RecruitStrategy::TaskTopK;
  throw ConfigError("unknown recruit strategy '" + label + "'");
}

std::string_view random_mode_id(RandomMode mode) {
  switch (mode) {
    case RandomMode::PerQuery: return "per_query";
    case RandomMode::PerRun: return "per_run";
  }
  return "";
}

RandomMode parse_random_mode(const std::string& label) {
  if (label == "per_query") return RandomMode::PerQuery;
  if (label == "per_run") return RandomMode::PerRun;
  throw ConfigError("unknown random mode '" + label + "'");
}

void EvalConfig::validate() const {
  recruitment.validate();
  collab.validate();
}

std::vector<std::string> task_top_k(const ExpertiseTable& table, std::size_t k) {
  return top_n_by_score(task_scores(table), k);
}

std::vector<std::string> random_k(const ExpertiseTable& table, std::size_t k,
                                  std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(table.profiles.size());
  for (const auto& [id, profile] : table.profiles) ids.push_back(id);
  if (k > ids.size()) k = ids.size();
  // Partial Fisher-Yates with plain modulo draws: the tiny bias does not
  // matter here, bit-for-bit reproducibility across platforms does.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  return ids;
}

EvalRun evaluate(const std::vector<QueryRecord>& corpus, const ExpertiseTable& table,
                 const BackendPool& pool, const EvalConfig& config,
                 const DepartmentAliases& aliases) {
  config.validate();
  if (corpus.empty()) {
    throw EmptyCorpusError("nothing to evaluate: corpus is empty");
  }
  bool any_gold = std::any_of(corpus.begin(), corpus.end(),
                              [](const QueryRecord& r) { return r.gold.has_value(); });
  if (!any_gold) {
    throw NoGoldLabelsError();
  }

  std::vector<std::string> fixed_set;
  if (config.strategy == RecruitStrategy::TaskTopK) {
    fixed_set = task_top_k(table, config.set_size());
  } else if (config.strategy == RecruitStrategy::RandomK &&
             config.random_mode == RandomMode::PerRun) {
    fixed_set = random_k(table, config.set_size(), config.seed);
  }

  std::vector<PerQueryResult> rows(corpus.size());
  std::vector<std::optional<CollabTranscript>> transcripts(corpus.size());
  parallel_for(corpus.size(), config.query_parallel, [&](std::size_t i) {
    const QueryRecord& query = corpus[i];
    try {
      CollabTranscript transcript =
          config.strategy == RecruitStrategy::ExpertiseAware
              ? run_pipeline(query, table, pool, config.recruitment, config.collab,
                             aliases)
              : run_layers(query,
                           ablation_recruitment(query, table, config, fixed_set),
                           pool, config.collab);
      rows[i] = result_from_transcript(query, transcript);
      if (config.keep_transcripts) transcripts[i] = std::move(transcript);
    } catch (const Error& err) {
      PerQueryResult& row = rows[i];
      row.query_id = query.id;
      row.subject = query.subject;
      row.gold = query.gold;
      row.failed = true;
      row.error = err.what();
    }
  });

  std::sort(rows.begin(), rows.end(), [](const PerQueryResult& a, const PerQueryResult& b) {
    return a.query_id < b.query_id;
  });

  EvalRun run;
  RunReport& report = run.report;
  report.run_id = config.run_id;
  report.created_at = now_iso8601();
  report.corpus_id = corpus_content_hash(corpus);
  if (report.run_id.empty()) {
    report.run_id = "run-" + hex64(fnv1a64(report.created_at + report.corpus_id));
  }
  report.config = config_to_json(config);
  report.n_queries = static_cast<std::int64_t>(rows.size());

  std::vector<std::pair<std::string, std::string>> pairs;
  for (const PerQueryResult& row : rows) {
    if (row.failed) ++report.n_failed;
    if (!row.gold) continue;
    std::string predicted =
        row.failed ? std::string(kFailedClass) : std::string(1, row.answer);
    pairs.emplace_back(std::string(1, *row.gold), predicted);
    if (row.subject) {
      CategoryStat& stat = report.by_category[*row.subject];
      ++stat.count;
      if (row.correct) ++stat.correct;
    }
  }
  report.metrics = compute_metrics(ConfusionMatrix::from_pairs(pairs));
  report.per_query = std::move(rows);

  if (config.keep_transcripts) {
    for (auto& transcript : transcripts) {
      if (transcript) run.transcripts.push_back(std::move(*transcript));
    }
    std::sort(run.transcripts.begin(), run.transcripts.end(),
              [](const CollabTranscript& a, const CollabTranscript& b) {
                return a.query_id < b.query_id;
              });
  }
  return run;
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json by_category = nlohmann::json::object();
  for (const auto& [subject, stat] : report.by_category) {
    by_category[subject] = {{"count", stat.count},
                            {"correct", stat.correct},
                            {"accuracy", stat.accuracy()}};
  }
  nlohmann::json per_query = nlohmann::json::array();
  for (const PerQueryResult& row : report.per_query) {
    nlohmann::json item{
        {"query_id", row.query_id},
        {"answer", row.failed ? std::string(kFailedClass) : std::string(1, row.answer)},
        {"failed", row.failed},
        {"dept", row.dept},
        {"diff", row.diff},
        {"classifier_id", row.classifier_id},
        {"recruited", row.recruited},
        {"fallback", row.fallback},
    };
    if (row.subject) item["subject"] = *row.subject;
    if (row.gold) {
      item["gold"] = std::string(1, *row.gold);
      item["correct"] = row.correct;
    }
    if (!row.error.empty()) item["error"] = row.error;
    per_query.push_back(std::move(item));
  }
  return {
      {"run_id", report.run_id},
      {"created_at", report.created_at},
      {"corpus_id", report.corpus_id},
      {"config", report.config},
      {"n_queries", report.n_queries},
      {"n_failed", report.n_failed},
      {"metrics",
       {{"accuracy", report.metrics.accuracy},
        {"precision", report.metrics.precision},
        {"specificity", report.metrics.specificity},
        {"f1", report.metrics.f1},
        {"mcc", report.metrics.mcc},
        {"kappa", report.metrics.kappa}}},
      {"by_category", std::move(by_category)},
      {"per_query", std::move(per_query)},
  };
}

std::string report_to_text(const RunReport& report) {
  std::string out;
  out += "run " + report.run_id + " (" + report.created_at + ")\n";
  out += "queries: " + std::to_string(report.n_queries) +
         "  failed: " + std::to_string(report.n_failed) + "\n";
  out += "accuracy: " + format_double(report.metrics.accuracy) +
         "  f1: " + format_double(report.metrics.f1) +
         "  precision: " + format_double(report.metrics.precision) +
         "  specificity: " + format_double(report.metrics.specificity) + "\n";
  out += "mcc: " + format_double(report.metrics.mcc) +
         "  kappa: " + format_double(report.metrics.kappa) + "\n";
  if (!report.by_category.empty()) {
    out += "by category:\n";
    for (const auto& [subject, stat] : report.by_category) {
      out += "  " + subject + ": " + std::to_string(stat.correct) + "/" +
             std::to_string(stat.count) + " (" + format_double(stat.accuracy()) + ")\n";
    }
  }
  return out;
}

AblationGrid AblationGrid::from_json(const nlohmann::json& value) {
  const nlohmann::json* variants = &value;
  if (value.is_object() && value.contains("variants")) {
    variants = &value.at("variants");
  }
  if (!variants->is_array()) {
    throw ConfigError("ablation grid must be a list of variants");
  }
  AblationGrid grid;
  std::set<std::string> names;
  for (const auto& entry : *variants) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry.at("name").is_string()) {
      throw ConfigError("every ablation variant needs a \"name\"");
    }
    AblationVariant variant;
    variant.name = entry.at("name").get<std::string>();
    if (!names.insert(variant.name).second) {
      throw ConfigError("duplicate ablation variant '" + variant.name + "'");
    }
    variant.patch = entry;
    variant.patch.erase("name");
    grid.variants.push_back(std::move(variant));
  }
  if (grid.variants.empty()) {
    throw ConfigError("ablation grid lists no variants");
  }
  return grid;
}

AblationGrid AblationGrid::load(const std::string& path) {
  return from_json(read_json_file(path));
}

EvalConfig apply_patch(const EvalConfig& base, const nlohmann::json& patch) {
  if (!patch.is_object()) {
    throw ConfigError("ablation patch must be an object");
  }
  EvalConfig config = base;
  for (const auto& [key, value] : patch.items()) {
    if (key == "strategy") {
      config.strategy = parse_recruit_strategy(value.get<std::string>());
    } else if (key == "random_mode") {
      config.random_mode = parse_random_mode(value.get<std::string>());
    } else if (key == "seed") {
      config.seed = value.get<std::uint64_t>();
    } else if (key == "k") {
      config.k = value.get<std::size_t>();
    } else if (key == "beta") {
      config.recruitment.beta = value.get<double>();
    } else if (key == "n_agents") {
      config.recruitment.n_agents = value.get<std::size_t>();
    } else if (key == "trust_labels") {
      config.recruitment.trust_labels = value.get<bool>();
    } else if (key == "classifier_override") {
      config.recruitment.classifier_override = value.get<std::string>();
    } else if (key == "alpha") {
      config.collab.alpha = value.get<double>();
    } else if (key == "layers") {
      config.collab.layers = value.get<int>();
    } else if (key == "aggregator_policy") {
      config.collab.aggregator_policy = parse_aggregator_policy(value.get<std::string>());
    } else if (key == "aggregator_id") {
      config.collab.aggregator_id = value.get<std::string>();
    } else if (key == "drop_confidence") {
      config.collab.drop_confidence = value.get<bool>();
    } else if (key == "drop_adversarial") {
      config.collab.drop_adversarial = value.get<bool>();
    } else {
      throw ConfigError("unknown ablation key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

std::vector<AblationResult> run_ablation(const std::vector<QueryRecord>& corpus,
                                         const ExpertiseTable& table,
                                         const BackendPool& pool,
                                         const EvalConfig& base,
                                         const AblationGrid& grid,
                                         const DepartmentAliases& aliases) {
  std::vector<AblationResult> results;
  results.reserve(grid.variants.size());
  for (const AblationVariant& variant : grid.variants) {
    EvalConfig config = apply_patch(base, variant.patch);
    config.keep_transcripts = false;
    if (config.run_id.empty()) {
      config.run_id = variant.name;
    } else {
      config.run_id += "/" + variant.name;
    }
    results.push_back(AblationResult{
        variant.name, evaluate(corpus, table, pool, config, aliases).report});
  }
  return results;
}

}  // namespace emrc
