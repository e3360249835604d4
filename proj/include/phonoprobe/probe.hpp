#ifndef PHONOPROBE_PROBE_HPP
#define PHONOPROBE_PROBE_HPP

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace phonoprobe {

/// Softmax classifier over standardized features. One weight row and one
/// intercept per class; the intercept is not penalized.
struct ProbeModel {
  Eigen::MatrixXd weights;   // K x d
  Eigen::VectorXd intercept; // K
  double lambda = 0.0;
  Eigen::VectorXd mean;  // d, training-feature means
  Eigen::VectorXd scale; // d, training-feature standard deviations (> 0)

  std::size_t classes() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
};

struct FitOptions {
  double lambda = 1.0;
  double tol = 1e-8; // on the gradient infinity-norm
  int max_iter = 10000;
  int history = 10; // L-BFGS memory
  bool record_objective = false;
  /// Optional starting point, parameters laid out as in probe_detail.
  const Eigen::VectorXd* init = nullptr;
};

struct ProbFit {
  ProbeModel model;
  double final_objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace; // accepted iterates, when requested
};

/// Fits on rows of `features` with class indices 0..n_classes-1. Every class
/// must occur at least once.
ProbFit fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
            std::size_t n_classes, const FitOptions& options);

Eigen::VectorXd predict_proba(const ProbeModel& model, const Eigen::VectorXd& x);
/// Row-wise class probabilities, n x K.
Eigen::MatrixXd predict_proba(const ProbeModel& model, const Eigen::MatrixXd& features);

/// Weights, intercept and standardization as CSV, one row per class plus
/// mean/scale rows.
void write_model_csv(const ProbeModel& model, std::ostream& out);

namespace probe_detail {

/// Training problem on already standardized features. Parameters are the
/// K x d weights in row-major order followed by the K intercepts.
struct Problem {
  const Eigen::MatrixXd* features = nullptr;
  const std::vector<int>* labels = nullptr;
  std::size_t classes = 0;
  double lambda = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(features->cols()); }
  std::size_t parameter_count() const { return classes * (dim() + 1); }
};

/// Mean negative log-likelihood + lambda/2 * ||W||_F^2, with gradient.
double objective(const Problem& problem, const Eigen::VectorXd& params, Eigen::VectorXd* grad);

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

Standardization standardization_of(const Eigen::MatrixXd& features);
Eigen::MatrixXd apply(const Standardization& s, const Eigen::MatrixXd& features);

} // namespace probe_detail

} // namespace phonoprobe

#endif
