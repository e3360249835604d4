#ifndef PHONOPROBE_XVAL_HPP
#define PHONOPROBE_XVAL_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "phonoprobe/evalmetrics.hpp"
#include "phonoprobe/probe.hpp"

namespace phonoprobe {

using Folds = std::vector<std::vector<std::size_t>>; // fold -> sorted sample indices

/// Stratified k-fold split: per label, fold counts differ by at most one.
/// Deterministic in (labels, k, seed).
Folds stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);

struct FoldPlan {
  std::size_t k_outer = 10;
  std::size_t k_inner = 5;
  std::uint64_t seed = 0;
  Folds outer;              // test indices of each outer fold
  std::vector<Folds> inner; // per outer fold: validation folds over its training indices
};

FoldPlan make_fold_plan(const std::vector<int>& labels, std::size_t k_outer,
                        std::size_t k_inner, std::uint64_t seed);

/// Complement of outer fold `f` in 0..n-1, ascending.
std::vector<std::size_t> training_indices(const FoldPlan& plan, std::size_t f, std::size_t n);

/// Rows: outer_fold,inner_fold,sample_index (inner_fold -1 marks outer test).
void write_fold_plan_csv(const FoldPlan& plan, std::ostream& out);

/// Default L2 grid: 7 points log-uniform on [1e-4, 1e2].
std::vector<double> default_lambda_grid();
std::vector<double> log_uniform_grid(double lo, double hi, std::size_t points);

struct CvOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  AucVariant variant = AucVariant::one_vs_one;
  /// When nonzero, PCA to this many components is fit on each training split.
  std::size_t fold_pca_dim = 0;
  std::size_t jobs = 1;
};

struct FoldOutcome {
  double lambda = 0.0;
  std::vector<double> inner_scores; // mean inner-validation AUC per grid entry
  AUCReport test;
  ProbeModel model;
  bool converged = true;
};

struct HeldOutScore {
  std::vector<FoldOutcome> folds;
  double aggregate = 0.0;

  /// Mean over folds of the held-out AUC of one class pair.
  double mean_pair_auc(int a, int b) const;
};

/// Nested CV: the inner loop picks lambda (ties go to the larger value), the
/// chosen probe is refit on the outer training split and scored on the
/// untouched test fold.
HeldOutScore nested_cv_evaluate(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                std::size_t n_classes, const std::vector<double>& lambda_grid,
                                const FoldPlan& plan, const CvOptions& options = {});

} // namespace phonoprobe

#endif
