#include "emrc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "emrc/errors.hpp"

namespace emrc {

ConfusionMatrix ConfusionMatrix::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& gold_predicted) {
  std::set<std::string> labels;
  for (const auto& [gold, predicted] : gold_predicted) {
    labels.insert(gold);
    labels.insert(predicted);
  }
  ConfusionMatrix matrix;
  matrix.classes.assign(labels.begin(), labels.end());
  matrix.counts.assign(matrix.classes.size(),
                       std::vector<std::int64_t>(matrix.classes.size(), 0));
  for (const auto& [gold, predicted] : gold_predicted) {
    ++matrix.counts[matrix.index_of(gold)][matrix.index_of(predicted)];
  }
  return matrix;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t sum = 0;
  for (const auto& row : counts) {
    for (std::int64_t cell : row) sum += cell;
  }
  return sum;
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) {
    throw Error("label '" + label + "' is not in the confusion matrix");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

std::int64_t ConfusionMatrix::at(const std::string& truth,
                                 const std::string& predicted) const {
  return counts[index_of(truth)][index_of(predicted)];
}

MetricsBundle compute_metrics(const ConfusionMatrix& matrix) {
  std::size_t n = matrix.classes.size();
  double total = static_cast<double>(matrix.total());
  if (n == 0 || total == 0.0) {
    throw NoGoldLabelsError();
  }

  std::vector<double> row_sum(n, 0.0);  // true-class supports
  std::vector<double> col_sum(n, 0.0);  // prediction counts
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double cell = static_cast<double>(matrix.counts[i][j]);
      row_sum[i] += cell;
      col_sum[j] += cell;
      if (i == j) trace += cell;
    }
  }

  MetricsBundle bundle;
  bundle.accuracy = trace / total;

  for (std::size_t k = 0; k < n; ++k) {
    double tp = static_cast<double>(matrix.counts[k][k]);
    double fp = col_sum[k] - tp;
    double fn = row_sum[k] - tp;
    double tn = total - tp - fp - fn;
    double precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    double recall = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
    double specificity = (tn + fp) > 0.0 ? tn / (tn + fp) : 0.0;
    double f1 = (precision + recall) > 0.0
                    ? 2.0 * precision * recall / (precision + recall)
                    : 0.0;
    double weight = row_sum[k] / total;
    bundle.precision += weight * precision;
    bundle.specificity += weight * specificity;
    bundle.f1 += weight * f1;
  }

  double dot = 0.0;      // sum of row_sum[k] * col_sum[k]
  double row_sq = 0.0;
  double col_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    dot += row_sum[k] * col_sum[k];
    row_sq += row_sum[k] * row_sum[k];
    col_sq += col_sum[k] * col_sum[k];
  }
  double mcc_denom = std::sqrt((total * total - col_sq) * (total * total - row_sq));
  bundle.mcc = mcc_denom > 0.0 ? (trace * total - dot) / mcc_denom : 0.0;

  double p_e = dot / (total * total);
  bundle.kappa = (1.0 - p_e) != 0.0 ? (bundle.accuracy - p_e) / (1.0 - p_e) : 0.0;

  return bundle;
}

}  // namespace emrc
