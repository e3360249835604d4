#include "phonoprobe/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "phonoprobe/error.hpp"

namespace phonoprobe {

double binary_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) {
    throw Error(ErrorKind::contract, "binary_auc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks of the positives; ranks are 1-based.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorKind::metric, "AUC needs at least one positive and one negative sample");
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - 0.5 * np * (np + 1.0);
  return u / (np * static_cast<double>(n_neg));
}

double AUCReport::pair(int a, int b) const {
  for (const auto& p : pairwise) {
    if ((p.class_a == a && p.class_b == b) || (p.class_a == b && p.class_b == a)) return p.auc;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

AUCReport weighted_multiclass_auc(const Eigen::MatrixXd& proba, const std::vector<int>& labels,
                                  AucVariant variant) {
  const auto n = static_cast<std::size_t>(proba.rows());
  const auto K = static_cast<int>(proba.cols());
  if (labels.size() != n) {
    throw Error(ErrorKind::contract, "probability rows and labels differ in length");
  }
  if (K < 2) throw Error(ErrorKind::contract, "multiclass AUC needs at least two classes");
  std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
  for (int l : labels) {
    if (l < 0 || l >= K) throw Error(ErrorKind::contract, fmt::format("label {} out of range", l));
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < K; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw Error(ErrorKind::metric, fmt::format("class {} has no samples", c));
    }
  }

  AUCReport report;
  std::vector<double> scores;
  std::vector<bool> truth;
  auto auc_of = [&] { return binary_auc(scores, truth); };

  if (variant == AucVariant::one_vs_one) {
    double weight_sum = 0.0;
    for (int a = 0; a < K; ++a) {
      for (int b = a + 1; b < K; ++b) {
        double directions = 0.0;
        for (int positive_class : {a, b}) {
          scores.clear();
          truth.clear();
          for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != a && labels[i] != b) continue;
            scores.push_back(proba(static_cast<Eigen::Index>(i), positive_class));
            truth.push_back(labels[i] == positive_class);
          }
          directions += auc_of();
        }
        const double w = static_cast<double>(counts[static_cast<std::size_t>(a)] +
                                             counts[static_cast<std::size_t>(b)]);
        report.pairwise.push_back({a, b, 0.5 * directions, w});
        weight_sum += w;
      }
    }
    for (auto& p : report.pairwise) p.weight /= weight_sum;
  } else {
    for (int c = 0; c < K; ++c) {
      scores.clear();
      truth.clear();
      for (std::size_t i = 0; i < n; ++i) {
        scores.push_back(proba(static_cast<Eigen::Index>(i), c));
        truth.push_back(labels[i] == c);
      }
      report.pairwise.push_back({c, -1, auc_of(),
                                 static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                                     static_cast<double>(n)});
    }
  }
  for (const auto& p : report.pairwise) report.weighted_total += p.weight * p.auc;
  return report;
}

} // namespace phonoprobe
