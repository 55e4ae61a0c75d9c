#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emrc/collaboration.hpp"
#include "emrc/metrics.hpp"

namespace emrc {

/// Predicted-class label recorded when a query's pipeline failed outright.
inline constexpr std::string_view kFailedClass = "(failed)";

/// Classifier ids recorded by the recruitment ablations, which skip the
/// classification call entirely.
inline constexpr std::string_view kRandomClassifierId = "(random)";
inline constexpr std::string_view kTaskTopClassifierId = "(task-top)";

enum class RecruitStrategy {
  ExpertiseAware,  // classify, score, top-n
  RandomK,         // seeded random draw of k backends
  TaskTopK,        // fixed top-k by corpus-wide answer accuracy
};

enum class RandomMode {
  PerQuery,  // fresh draw per query, seeded from run seed and query id
  PerRun,    // one draw shared by every query
};

std::string_view recruit_strategy_id(RecruitStrategy strategy);
RecruitStrategy parse_recruit_strategy(const std::string& label);
std::string_view random_mode_id(RandomMode mode);
RandomMode parse_random_mode(const std::string& label);

struct EvalConfig {
  RecruitmentConfig recruitment;
  CollabConfig collab;
  RecruitStrategy strategy = RecruitStrategy::ExpertiseAware;
  RandomMode random_mode = RandomMode::PerQuery;
  std::uint64_t seed = 0;
  std::size_t k = 0;  // RandomK / TaskTopK set size; 0 means recruitment.n_agents
  std::size_t query_parallel = 1;
  bool keep_transcripts = false;
  std::string run_id;  // generated when empty

  std::size_t set_size() const { return k == 0 ? recruitment.n_agents : k; }
  void validate() const;
};

struct PerQueryResult {
  std::string query_id;
  std::optional<std::string> subject;
  std::optional<char> gold;
  char answer = '?';
  bool correct = false;  // meaningful only when gold is set and not failed
  bool failed = false;
  std::string error;
  std::string dept;  // classified department code
  std::string diff;  // classified difficulty code
  std::string classifier_id;
  std::vector<std::string> recruited;
  bool fallback = false;
};

struct CategoryStat {
  std::int64_t count = 0;
  std::int64_t correct = 0;

  double accuracy() const {
    return count > 0 ? static_cast<double>(correct) / static_cast<double>(count) : 0.0;
  }
};

struct RunReport {
  std::string run_id;
  std::string created_at;
  std::string corpus_id;
  nlohmann::json config;
  std::int64_t n_queries = 0;
  std::int64_t n_failed = 0;
  MetricsBundle metrics;  // over final answers vs gold
  std::map<std::string, CategoryStat> by_category;  // keyed by subject
  std::vector<PerQueryResult> per_query;            // sorted by query id
};

/// Full harness run plus, when asked for, the raw transcripts in query order.
struct EvalRun {
  RunReport report;
  std::vector<CollabTranscript> transcripts;
};

/// Backends ranked by support-weighted department-cell accuracy, best first.
std::vector<std::string> task_top_k(const ExpertiseTable& table, std::size_t k);

/// Seeded draw of k distinct profile ids; identical seeds give identical
/// draws regardless of platform.
std::vector<std::string> random_k(const ExpertiseTable& table, std::size_t k,
                                  std::uint64_t seed);

/// Runs the pipeline over the corpus. Per-query failures degrade into
/// (failed) rows; throws NoGoldLabelsError when no record carries a gold
/// answer.
EvalRun evaluate(const std::vector<QueryRecord>& corpus, const ExpertiseTable& table,
                 const BackendPool& pool, const EvalConfig& config,
                 const DepartmentAliases& aliases);

nlohmann::json report_to_json(const RunReport& report);
std::string report_to_text(const RunReport& report);

struct AblationVariant {
  std::string name;
  nlohmann::json patch;  // fields overriding the base config
};

struct AblationGrid {
  std::vector<AblationVariant> variants;

  static AblationGrid from_json(const nlohmann::json& value);
  static AblationGrid load(const std::string& path);
};

/// Applies a variant patch to a base config.
EvalConfig apply_patch(const EvalConfig& base, const nlohmann::json& patch);

struct AblationResult {
  std::string name;
  RunReport report;
};

std::vector<AblationResult> run_ablation(const std::vector<QueryRecord>& corpus,
                                         const ExpertiseTable& table,
                                         const BackendPool& pool,
                                         const EvalConfig& base,
                                         const AblationGrid& grid,
                                         const DepartmentAliases& aliases);

}  // namespace emrc
