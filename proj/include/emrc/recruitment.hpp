#pragma once

#include <map>
#include <string>
#include <vector>

#include "emrc/expertise.hpp"

namespace emrc {

inline constexpr double kDefaultBeta = 0.7;
inline constexpr std::size_t kDefaultAgents = 4;

/// Sentinel classifier id recorded when gold labels bypass classification.
inline constexpr std::string_view kLabelClassifierId = "(labels)";

struct RecruitmentConfig {
  double beta = kDefaultBeta;       // weight of the department cell vs difficulty
  std::size_t n_agents = kDefaultAgents;
  std::string classifier_override;  // empty picks the best classifier from the table
  bool trust_labels = false;        // use corpus labels instead of a classifier

  void validate() const;
};

struct RecruitmentResult {
  std::string query_id;
  ClassificationPrediction classification;
  std::string classifier_id;
  std::map<std::string, double> scores;  // composite score per backend
  std::vector<std::string> recruited;    // score desc, id asc
};

/// Backend whose classification accuracy sum is highest (ties go to the
/// lexicographically smallest id).
std::string select_classifier(const ExpertiseTable& table);

/// One classification call with the backend's retry budget; throws
/// ClassificationFailure once the budget is exhausted.
ClassificationPrediction classify_query(const QueryRecord& query, Backend& classifier,
                                        const DepartmentAliases& aliases);

/// Composite expertise for every profiled backend:
/// beta * dept cell + (1 - beta) * difficulty cell.
std::map<std::string, double> score_backends(const ExpertiseTable& table,
                                             Department dept, Difficulty diff,
                                             double beta);

/// Ids of the n highest-scoring backends, score descending, id ascending.
std::vector<std::string> top_n_by_score(const std::map<std::string, double>& scores,
                                        std::size_t n);

/// Full recruitment: classify (or trust labels), score, take the top n.
RecruitmentResult recruit(const QueryRecord& query, const ExpertiseTable& table,
                          const BackendPool& pool, const RecruitmentConfig& config,
                          const DepartmentAliases& aliases);

}  // namespace emrc
