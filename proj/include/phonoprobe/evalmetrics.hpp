#ifndef PHONOPROBE_EVALMETRICS_HPP
#define PHONOPROBE_EVALMETRICS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace phonoprobe {

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs ordered
/// correctly, ties counting one half. Sort-based with midranks.
double binary_auc(std::span<const double> scores, const std::vector<bool>& positive);

enum class AucVariant {
  one_vs_one,  // pairwise, weighted by the pair's combined prevalence
  one_vs_rest, // per class against the rest, weighted by class prevalence
};

struct PairAuc {
  int class_a = 0;
  int class_b = 0; // -1 means "rest" for the one-vs-rest variant
  double auc = 0.0;
  double weight = 0.0;
};

struct AUCReport {
  std::vector<PairAuc> pairwise;
  double weighted_total = 0.0;

  /// AUC of the unordered pair, or NaN if the report has no such entry.
  double pair(int a, int b) const;
};

/// Prevalence-weighted multiclass AUC over an n x K probability matrix.
/// Every class 0..K-1 must be present.
AUCReport weighted_multiclass_auc(const Eigen::MatrixXd& proba, const std::vector<int>& labels,
                                  AucVariant variant = AucVariant::one_vs_one);

} // namespace phonoprobe

#endif
