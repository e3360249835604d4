#ifndef PHONOPROBE_DIMSELECT_HPP
#define PHONOPROBE_DIMSELECT_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "phonoprobe/reprstore.hpp"

namespace phonoprobe {

/// Principal axes of a centered data matrix. Only components with nonzero
/// variance (numerical rank) are kept.
struct PCAProjection {
  Eigen::VectorXd mean;               // D
  Eigen::MatrixXd components;         // r x D, orthonormal rows
  Eigen::VectorXd explained_variance; // r, non-increasing

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t available() const { return static_cast<std::size_t>(components.rows()); }
};

/// Sign convention: each component's largest-magnitude coordinate is positive.
PCAProjection fit_pca(const Eigen::MatrixXd& X);

/// (X - mean) * components^T restricted to the first d components.
Eigen::MatrixXd project(const PCAProjection& p, const Eigen::MatrixXd& X, std::size_t d);

/// Every frame of the store projected to d components; layer_id is kept.
LayerStore project_store(const LayerStore& store, const PCAProjection& p, std::size_t d);

/// Maps d-dimensional scores back to the input space.
Eigen::MatrixXd reconstruct(const PCAProjection& p, const Eigen::MatrixXd& scores);

/// Held-out AUCs of the two positive and two negative controls at one layer.
struct LayerControlScores {
  std::optional<double> p1, p2, n1, n2;
};

using ControlScores = std::map<int, LayerControlScores>; // layer_id -> scores

/// Sum over layers of P1 + P2 - N1 - N2.
double control_score(const ControlScores& scores);

/// {2, 4, 8, ...} up to D, with D appended when it is not a power of two.
std::vector<std::size_t> dimension_grid(std::size_t D);

struct SelectionResult {
  std::vector<std::size_t> grid;       // ascending
  std::map<std::size_t, double> score; // S^d per candidate
  std::size_t d_star = 0;
};

/// Smallest d attaining the maximal control score.
SelectionResult select_dim(const std::vector<std::pair<std::size_t, double>>& per_d_scores);
SelectionResult select_dim(const std::map<std::size_t, double>& per_d_scores);

} // namespace phonoprobe

#endif
