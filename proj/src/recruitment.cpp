#include "emrc/recruitment.hpp"

#include <algorithm>

#include "emrc/prompts.hpp"

namespace emrc {

void RecruitmentConfig::validate() const {
  if (beta < 0.0 || beta > 1.0) {
    throw ConfigError("beta must be in [0, 1]");
  }
  if (n_agents == 0) {
    throw ConfigError("n_agents must be >= 1");
  }
}

std::string select_classifier(const ExpertiseTable& table) {
  if (table.profiles.empty()) {
    throw EmptyTableError("cannot pick a classifier from an empty table");
  }
  const std::string* best = nullptr;
  double best_score = -1.0;
  for (const auto& [id, profile] : table.profiles) {
    double score = profile.classifier_score();
    if (score > best_score) {  // map order makes ties resolve to the smallest id
      best_score = score;
      best = &id;
    }
  }
  return *best;
}

ClassificationPrediction classify_query(const QueryRecord& query, Backend& classifier,
                                        const DepartmentAliases& aliases) {
  const PromptTemplate& tmpl = prompt_template("classify");
  RenderedPrompt prompt{std::string(tmpl.name), query.id,
                        render(tmpl, {{"departments", render_department_list()},
                                      {"difficulties", render_difficulty_list()},
                                      {"stem", query.stem},
                                      {"options", render_options(query)}})};
  try {
    return complete_parsed(classifier, prompt, [&](const std::string& raw) {
      return parse_classification(raw, aliases);
    });
  } catch (const ParseFailure& err) {
    throw ClassificationFailure(query.id, err.what());
  }
}

std::map<std::string, double> score_backends(const ExpertiseTable& table,
                                             Department dept, Difficulty diff,
                                             double beta) {
  if (table.profiles.empty()) {
    throw EmptyTableError("cannot score backends with an empty table");
  }
  std::map<std::string, double> scores;
  auto d = department_index(dept);
  auto l = difficulty_index(diff);
  for (const auto& [id, profile] : table.profiles) {
    scores[id] = beta * profile.dept_acc[d] + (1.0 - beta) * profile.diff_acc[l];
  }
  return scores;
}

std::vector<std::string> top_n_by_score(const std::map<std::string, double>& scores,
                                        std::size_t n) {
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<std::string> ids;
  ids.reserve(ranked.size());
  for (auto& [id, score] : ranked) ids.push_back(std::move(id));
  return ids;
}

RecruitmentResult recruit(const QueryRecord& query, const ExpertiseTable& table,
                          const BackendPool& pool, const RecruitmentConfig& config,
                          const DepartmentAliases& aliases) {
  config.validate();
  RecruitmentResult result;
  result.query_id = query.id;
  if (config.trust_labels) {
    if (!query.labeled()) {
      throw Error("query '" + query.id +
                  "' has no labels to trust; run a classifier instead");
    }
    result.classification = {*query.dept_label, *query.diff_label};
    result.classifier_id = std::string(kLabelClassifierId);
  } else {
    std::string classifier_id = config.classifier_override.empty()
                                    ? select_classifier(table)
                                    : config.classifier_override;
    result.classification = classify_query(query, pool.get(classifier_id), aliases);
    result.classifier_id = classifier_id;
  }
  result.scores = score_backends(table, result.classification.dept,
                                 result.classification.diff, config.beta);
  result.recruited = top_n_by_score(result.scores, config.n_agents);
  return result;
}

}  // namespace emrc
