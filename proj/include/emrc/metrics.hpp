#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace emrc {

/// Square contingency table over the union of observed labels, sorted.
/// counts[i][j] is the number of items with true class i predicted as j.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::int64_t>> counts;

  static ConfusionMatrix from_pairs(
      const std::vector<std::pair<std::string, std::string>>& gold_predicted);

  std::int64_t total() const;
  std::size_t index_of(const std::string& label) const;
  std::int64_t at(const std::string& truth, const std::string& predicted) const;
};

/// Headline classification metrics. precision, specificity and f1 are
/// one-vs-rest per class and support-weighted; mcc is the multiclass
/// correlation; kappa is chance-corrected agreement. Degenerate
/// denominators read as zero.
struct MetricsBundle {
  double accuracy = 0.0;
  double precision = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double kappa = 0.0;
};

/// Throws NoGoldLabelsError on an empty matrix.
MetricsBundle compute_metrics(const ConfusionMatrix& matrix);

}  // namespace emrc
