#include "phonoprobe/xval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "phonoprobe/dimselect.hpp"
#include "phonoprobe/error.hpp"
#include "phonoprobe/parallel.hpp"

namespace phonoprobe {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::vector<int> labels_of(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

std::vector<std::size_t> set_difference(const std::vector<std::size_t>& all,
                                        const std::vector<std::size_t>& remove) {
  std::vector<std::size_t> out;
  std::set_difference(all.begin(), all.end(), remove.begin(), remove.end(),
                      std::back_inserter(out));
  return out;
}

Eigen::VectorXd parameters_of(const ProbeModel& m) {
  const auto K = m.weights.rows();
  const auto d = m.weights.cols();
  Eigen::VectorXd x(K * (d + 1));
  for (Eigen::Index c = 0; c < K; ++c) x.segment(c * d, d) = m.weights.row(c).transpose();
  x.tail(K) = m.intercept;
  return x;
}

struct SplitResult {
  AUCReport report;
  ProbeModel model;
  bool converged = true;
};

class SplitEvaluator {
public:
  SplitEvaluator(const Eigen::MatrixXd& X, const std::vector<int>& labels, std::size_t n_classes,
                 const CvOptions& options)
      : X_(X), labels_(labels), n_classes_(n_classes), options_(options) {}

  SplitResult run(const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                  double lambda, const Eigen::VectorXd* init) const {
    Eigen::MatrixXd Xtr = rows_of(X_, train);
    Eigen::MatrixXd Xte = rows_of(X_, test);
    if (options_.fold_pca_dim > 0) {
      const auto pca = fit_pca(Xtr);
      const auto d = std::min(options_.fold_pca_dim, pca.available());
      Xte = project(pca, Xte, d);
      Xtr = project(pca, Xtr, d);
    }
    const auto ytr = labels_of(labels_, train);
    FitOptions fo;
    fo.lambda = lambda;
    fo.tol = options_.tol;
    fo.max_iter = options_.max_iter;
    if (init && init->size() == static_cast<Eigen::Index>(n_classes_ * (Xtr.cols() + 1))) {
      fo.init = init;
    }
    auto fitted = fit(Xtr, ytr, n_classes_, fo);
    SplitResult r;
    r.report = weighted_multiclass_auc(predict_proba(fitted.model, Xte), labels_of(labels_, test),
                                       options_.variant);
    r.model = std::move(fitted.model);
    r.converged = fitted.converged;
    return r;
  }

private:
  const Eigen::MatrixXd& X_;
  const std::vector<int>& labels_;
  std::size_t n_classes_;
  const CvOptions& options_;
};

} // namespace

Folds stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::contract, "need at least two folds");
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  for (const auto& [label, idx] : by_label) {
    if (idx.size() < k) {
      throw Error(ErrorKind::insufficient,
                  fmt::format("label {} has {} samples, fewer than the {} folds requested", label,
                              idx.size(), k));
    }
  }
  std::mt19937_64 rng(seed);
  Folds folds(k);
  std::size_t next_fold = 0;
  for (auto& [label, idx] : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) {
      folds[next_fold].push_back(i);
      next_fold = (next_fold + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

FoldPlan make_fold_plan(const std::vector<int>& labels, std::size_t k_outer,
                        std::size_t k_inner, std::uint64_t seed) {
  FoldPlan plan;
  plan.k_outer = k_outer;
  plan.k_inner = k_inner;
  plan.seed = seed;
  plan.outer = stratified_folds(labels, k_outer, seed);
  for (std::size_t f = 0; f < k_outer; ++f) {
    const auto train = training_indices(plan, f, labels.size());
    const auto sub = stratified_folds(labels_of(labels, train), k_inner, mix_seed(seed, f));
    Folds inner;
    for (const auto& fold : sub) {
      std::vector<std::size_t> absolute;
      absolute.reserve(fold.size());
      for (auto j : fold) absolute.push_back(train[j]);
      inner.push_back(std::move(absolute));
    }
    plan.inner.push_back(std::move(inner));
  }
  return plan;
}

std::vector<std::size_t> training_indices(const FoldPlan& plan, std::size_t f, std::size_t n) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  return set_difference(all, plan.outer.at(f));
}

void write_fold_plan_csv(const FoldPlan& plan, std::ostream& out) {
  out << "outer_fold,inner_fold,sample_index\n";
  for (std::size_t f = 0; f < plan.outer.size(); ++f) {
    for (auto i : plan.outer[f]) out << f << ",-1," << i << '\n';
    if (f < plan.inner.size()) {
      for (std::size_t j = 0; j < plan.inner[f].size(); ++j) {
        for (auto i : plan.inner[f][j]) out << f << ',' << j << ',' << i << '\n';
      }
    }
  }
}

std::vector<double> log_uniform_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi >= lo) || points == 0) {
    throw Error(ErrorKind::contract, "log-uniform grid needs 0 < lo <= hi and points >= 1");
  }
  if (points == 1) return {lo};
  std::vector<double> grid;
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i) {
    grid.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) /
                                          static_cast<double>(points - 1)));
  }
  return grid;
}

std::vector<double> default_lambda_grid() { return log_uniform_grid(1e-4, 1e2, 7); }

double HeldOutScore::mean_pair_auc(int a, int b) const {
  double sum = 0.0;
  for (const auto& f : folds) sum += f.test.pair(a, b);
  return folds.empty() ? 0.0 : sum / static_cast<double>(folds.size());
}

HeldOutScore nested_cv_evaluate(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                std::size_t n_classes, const std::vector<double>& lambda_grid,
                                const FoldPlan& plan, const CvOptions& options) {
  const std::size_t n = labels.size();
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw Error(ErrorKind::contract, "feature rows and labels differ in length");
  }
  if (lambda_grid.empty()) throw Error(ErrorKind::contract, "empty lambda grid");
  if (plan.outer.size() < 2 || plan.inner.size() != plan.outer.size()) {
    throw Error(ErrorKind::contract, "fold plan is incomplete");
  }
  std::vector<char> seen(n, 0);
  for (const auto& fold : plan.outer) {
    for (auto i : fold) {
      if (i >= n || seen[i]) throw Error(ErrorKind::contract, "fold plan does not match the data");
      seen[i] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorKind::contract, "outer folds do not cover every sample");
  }

  // Larger lambdas first so each inner fold can warm-start the next fit.
  std::vector<std::size_t> order(lambda_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambda_grid[a] > lambda_grid[b]; });

  const SplitEvaluator eval(features, labels, n_classes, options);
  HeldOutScore result;
  result.folds.resize(plan.outer.size());

  parallel_for(plan.outer.size(), options.jobs, [&](std::size_t f) {
    try {
      const auto train = training_indices(plan, f, n);
      const auto& inner = plan.inner[f];
      FoldOutcome& out = result.folds[f];
      out.inner_scores.assign(lambda_grid.size(), 0.0);
      std::vector<Eigen::VectorXd> warm(inner.size());
      for (auto li : order) {
        double sum = 0.0;
        for (std::size_t j = 0; j < inner.size(); ++j) {
          const auto inner_train = set_difference(train, inner[j]);
          auto r = eval.run(inner_train, inner[j], lambda_grid[li],
                            warm[j].size() ? &warm[j] : nullptr);
          warm[j] = parameters_of(r.model);
          sum += r.report.weighted_total;
        }
        out.inner_scores[li] = sum / static_cast<double>(inner.size());
      }
      std::size_t best = order.front();
      for (auto li : order) {
        const double s = out.inner_scores[li];
        const double b = out.inner_scores[best];
        if (s > b || (s == b && lambda_grid[li] > lambda_grid[best])) best = li;
      }
      out.lambda = lambda_grid[best];
      auto r = eval.run(train, plan.outer[f], out.lambda, nullptr);
      out.test = std::move(r.report);
      out.model = std::move(r.model);
      out.converged = r.converged;
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("outer fold {}", f));
    }
  });

  double sum = 0.0;
  for (const auto& f : result.folds) sum += f.test.weighted_total;
  result.aggregate = sum / static_cast<double>(result.folds.size());
  return result;
}

} // namespace phonoprobe
