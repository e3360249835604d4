#include "phonoprobe/probe.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <ostream>

#include <fmt/format.h>

#include "phonoprobe/error.hpp"
#include "text.hpp"

namespace phonoprobe {

namespace probe_detail {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

double objective(const Problem& problem, const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
  const auto& X = *problem.features;
  const auto& y = *problem.labels;
  const auto K = static_cast<Eigen::Index>(problem.classes);
  const auto d = X.cols();
  const auto n = X.rows();
  RowMajorMap W(params.data(), K, d);
  const auto b = params.tail(K);

  Eigen::MatrixXd Z = X * W.transpose();
  Z.rowwise() += b.transpose();

  long double loss = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto z = Z.row(i);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    loss += static_cast<long double>(lse - z(y[static_cast<std::size_t>(i)]));
    if (grad) z = (z.array() - lse).exp();
  }
  const double penalty = 0.5 * problem.lambda * W.squaredNorm();
  const double f = static_cast<double>(loss / static_cast<long double>(n)) + penalty;

  if (grad) {
    // Z now holds the class probabilities.
    for (Eigen::Index i = 0; i < n; ++i) Z(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    grad->resize(params.size());
    RowMajorMutMap gW(grad->data(), K, d);
    gW.noalias() = Z.transpose() * X / static_cast<double>(n);
    gW += problem.lambda * W;
    grad->tail(K) = Z.colwise().sum().transpose() / static_cast<double>(n);
  }
  return f;
}

Standardization standardization_of(const Eigen::MatrixXd& features) {
  Standardization s;
  const auto n = static_cast<double>(features.rows());
  s.mean = features.colwise().mean().transpose();
  s.scale.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    // Constant columns (up to rounding of the mean) keep unit scale.
    s.scale(j) = sd > 1e-10 * std::max(std::abs(s.mean(j)), 1e-300) ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd apply(const Standardization& s, const Eigen::MatrixXd& features) {
  return (features.rowwise() - s.mean.transpose()).array().rowwise() /
         s.scale.transpose().array();
}

} // namespace probe_detail

namespace {

using probe_detail::Problem;

struct Memory {
  std::deque<Eigen::VectorXd> s, y;
  std::deque<double> rho;

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }

  void push(Eigen::VectorXd sk, Eigen::VectorXd yk, std::size_t cap) {
    const double sy = sk.dot(yk);
    if (!(sy > 1e-12 * sk.norm() * yk.norm())) return;
    s.push_back(std::move(sk));
    y.push_back(std::move(yk));
    rho.push_back(1.0 / sy);
    if (s.size() > cap) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }

  // Two-loop recursion: returns -H g.
  Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s.size());
    for (std::size_t i = s.size(); i-- > 0;) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    if (!s.empty()) q *= s.back().dot(y.back()) / y.back().squaredNorm();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double beta = rho[i] * y[i].dot(q);
      q += (alpha[i] - beta) * s[i];
    }
    return -q;
  }
};

struct Step {
  Eigen::VectorXd x, g;
  double f = 0.0;
};

// Backtracking Armijo search. Once decreases fall below the resolution of
// the objective, a non-increasing step that shrinks the gradient is taken.
std::optional<Step> line_search(const Problem& problem, const Eigen::VectorXd& x, double f,
                                const Eigen::VectorXd& g, const Eigen::VectorXd& dir,
                                double alpha0) {
  constexpr double c1 = 1e-4;
  const double slope = g.dot(dir);
  const double g_inf = g.lpNorm<Eigen::Infinity>();
  std::optional<Step> fallback;
  double alpha = alpha0;
  for (int tries = 0; tries < 60; ++tries, alpha *= 0.5) {
    Step s;
    s.x = x + alpha * dir;
    s.f = probe_detail::objective(problem, s.x, &s.g);
    if (!std::isfinite(s.f)) continue;
    if (s.f <= f + c1 * alpha * slope) return s;
    if (!fallback && s.f <= f && s.g.lpNorm<Eigen::Infinity>() < g_inf) fallback = std::move(s);
  }
  return fallback;
}

} // namespace

ProbFit fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
            std::size_t n_classes, const FitOptions& options) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto d = static_cast<std::size_t>(features.cols());
  if (labels.size() != n) {
    throw Error(ErrorKind::contract,
                fmt::format("{} labels for {} feature rows", labels.size(), n));
  }
  if (d == 0) throw Error(ErrorKind::contract, "probe needs at least one feature");
  if (n_classes < 2) throw Error(ErrorKind::contract, "probe needs at least two classes");
  if (!(options.lambda >= 0.0) || !(options.tol > 0.0)) {
    throw Error(ErrorKind::contract, "probe needs lambda >= 0 and tol > 0");
  }
  std::vector<std::size_t> counts(n_classes, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes) {
      throw Error(ErrorKind::contract, fmt::format("label {} outside 0..{}", l, n_classes - 1));
    }
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorKind::insufficient, fmt::format("class {} has no training samples", c));
    }
  }
  if (!features.allFinite()) throw Error(ErrorKind::data, "non-finite feature values");

  const auto standardization = probe_detail::standardization_of(features);
  const Eigen::MatrixXd Xs = probe_detail::apply(standardization, features);
  const Problem problem{&Xs, &labels, n_classes, options.lambda};

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.parameter_count()));
  if (options.init) {
    if (options.init->size() != x.size()) {
      throw Error(ErrorKind::contract, "initial parameter vector has the wrong length");
    }
    x = *options.init;
  }

  ProbFit result;
  Eigen::VectorXd g;
  double f = probe_detail::objective(problem, x, &g);
  if (options.record_objective) result.objective_trace.push_back(f);

  Memory memory;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= options.tol) break;
    Eigen::VectorXd dir = memory.direction(g);
    if (!(g.dot(dir) < 0.0)) {
      memory.clear();
      dir = -g;
    }
    const double alpha0 = memory.s.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    auto step = line_search(problem, x, f, g, dir, alpha0);
    if (!step && !memory.s.empty()) {
      memory.clear();
      dir = -g;
      step = line_search(problem, x, f, g, dir, std::min(1.0, 1.0 / g.norm()));
    }
    if (!step) break; // no representable decrease remains
    memory.push(step->x - x, step->g - g, static_cast<std::size_t>(options.history));
    x = std::move(step->x);
    g = std::move(step->g);
    f = step->f;
    if (options.record_objective) result.objective_trace.push_back(f);
  }

  const auto K = static_cast<Eigen::Index>(n_classes);
  result.model.weights = probe_detail::RowMajorMap(x.data(), K, static_cast<Eigen::Index>(d));
  result.model.intercept = x.tail(K);
  result.model.lambda = options.lambda;
  result.model.mean = standardization.mean;
  result.model.scale = standardization.scale;
  result.final_objective = f;
  result.grad_norm = g.lpNorm<Eigen::Infinity>();
  result.iterations = iter;
  result.converged = result.grad_norm <= options.tol;
  return result;
}

Eigen::MatrixXd predict_proba(const ProbeModel& model, const Eigen::MatrixXd& features) {
  if (static_cast<std::size_t>(features.cols()) != model.dim()) {
    throw Error(ErrorKind::contract, fmt::format("feature dim {} does not match probe dim {}",
                                                 features.cols(), model.dim()));
  }
  const probe_detail::Standardization s{model.mean, model.scale};
  Eigen::MatrixXd Z = probe_detail::apply(s, features) * model.weights.transpose();
  Z.rowwise() += model.intercept.transpose();
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    auto z = Z.row(i);
    z = (z.array() - z.maxCoeff()).exp();
    z /= z.sum();
  }
  return Z;
}

Eigen::VectorXd predict_proba(const ProbeModel& model, const Eigen::VectorXd& x) {
  return predict_proba(model, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

void write_model_csv(const ProbeModel& model, std::ostream& out) {
  out << "row,intercept";
  for (std::size_t j = 0; j < model.dim(); ++j) out << ",w" << j;
  out << '\n';
  for (std::size_t c = 0; c < model.classes(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    out << "class" << c << ',' << text::format_double(model.intercept(ci));
    for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
      out << ',' << text::format_double(model.weights(ci, j));
    }
    out << '\n';
  }
  out << "mean,";
  for (Eigen::Index j = 0; j < model.mean.size(); ++j) {
    out << ',' << text::format_double(model.mean(j));
  }
  out << "\nscale,";
  for (Eigen::Index j = 0; j < model.scale.size(); ++j) {
    out << ',' << text::format_double(model.scale(j));
  }
  out << "\nlambda," << text::format_double(model.lambda) << '\n';
}

} // namespace phonoprobe
