#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emrc/backend.hpp"
#include "emrc/parsing.hpp"
#include "emrc/taxonomy.hpp"

namespace emrc {

inline constexpr std::string_view kTableFormatVersion = "1";

/// Everything the recruiter knows about one backend: how well it classifies
/// queries, and how accurately it answers per department and per difficulty.
struct BackendProfile {
  double classification_dept_acc = 0.0;
  double classification_diff_acc = 0.0;
  std::array<double, kDepartmentCount> dept_acc{};
  std::array<std::int64_t, kDepartmentCount> dept_support{};
  std::array<double, kDifficultyCount> diff_acc{};
  std::array<std::int64_t, kDifficultyCount> diff_support{};

  /// Classifier fitness: department accuracy plus difficulty accuracy.
  double classifier_score() const {
    return classification_dept_acc + classification_diff_acc;
  }

  bool operator==(const BackendProfile&) const = default;
};

struct ExpertiseTable {
  std::string version{kTableFormatVersion};
  std::string corpus_id;
  std::string created_at;
  std::map<std::string, BackendProfile> profiles;
};

/// One profiling probe against one backend. Unparseable or failed calls keep
/// the raw text and leave the parsed fields empty; they count as incorrect.
struct EvalOutcome {
  std::string backend_id;
  std::string query_id;
  std::optional<ClassificationPrediction> prediction;
  std::optional<char> answer;
  std::string raw_classification;
  std::string raw_answer;
};

/// Departments and difficulties the validation corpus never exercised.
struct CoverageReport {
  std::vector<Department> empty_departments;
  std::vector<Difficulty> empty_difficulties;

  bool complete() const {
    return empty_departments.empty() && empty_difficulties.empty();
  }
};

/// Stable content fingerprint over the canonical serialization of the corpus.
std::string corpus_content_hash(const std::vector<QueryRecord>& corpus);

/// Fills in missing department/difficulty labels by asking the labeler
/// backend. Throws LabelParseFailure when a record stays unlabelable after
/// the backend's retry budget.
std::vector<QueryRecord> pseudo_label(std::vector<QueryRecord> corpus,
                                      Backend& labeler,
                                      const DepartmentAliases& aliases,
                                      std::size_t parallel = 1);

/// Probes every backend with every record (one classification call, one
/// answering call). Total: backend and parse failures degrade to empty
/// outcomes instead of aborting the sweep. Requires fully labeled records.
std::vector<EvalOutcome> evaluate_pool(const std::vector<QueryRecord>& corpus,
                                       const BackendPool& pool,
                                       const DepartmentAliases& aliases,
                                       std::size_t parallel = 1);

/// Tallies outcomes into per-backend accuracy cells. Cells without support
/// stay at zero accuracy with zero support.
ExpertiseTable build_table(const std::vector<EvalOutcome>& outcomes,
                           const std::vector<QueryRecord>& corpus);

CoverageReport coverage_report(const ExpertiseTable& table);

nlohmann::json table_to_json(const ExpertiseTable& table);
ExpertiseTable table_from_json(const nlohmann::json& value);

void save_table(const ExpertiseTable& table, const std::string& path);

/// Throws CorruptTableError on unreadable or malformed files,
/// FormatVersionMismatchError on version drift, EmptyTableError when the
/// file lists no backends.
ExpertiseTable load_table(const std::string& path);

}  // namespace emrc
