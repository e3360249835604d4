#include "phonoprobe/dimselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "phonoprobe/error.hpp"

namespace phonoprobe {

PCAProjection fit_pca(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw Error(ErrorKind::contract, "PCA needs at least two rows");
  if (X.cols() < 1) throw Error(ErrorKind::contract, "PCA needs at least one column");
  if (!X.allFinite()) throw Error(ErrorKind::data, "PCA input has non-finite values");

  PCAProjection p;
  p.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - p.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();

  const double cutoff = std::max(X.rows(), X.cols()) * std::numeric_limits<double>::epsilon() *
                        (s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff && s(rank) > 0.0) ++rank;
  if (rank == 0) throw Error(ErrorKind::data, "PCA input is degenerate (all rows identical)");

  p.components = svd.matrixV().leftCols(rank).transpose();
  p.explained_variance = s.head(rank).array().square() / static_cast<double>(X.rows() - 1);
  for (Eigen::Index c = 0; c < rank; ++c) {
    Eigen::Index arg = 0;
    p.components.row(c).cwiseAbs().maxCoeff(&arg);
    if (p.components(c, arg) < 0.0) p.components.row(c) *= -1.0;
  }
  return p;
}

Eigen::MatrixXd project(const PCAProjection& p, const Eigen::MatrixXd& X, std::size_t d) {
  if (d < 1 || d > p.available()) {
    throw Error(ErrorKind::contract,
                fmt::format("cannot project onto {} components ({} available)", d, p.available()));
  }
  if (static_cast<std::size_t>(X.cols()) != p.input_dim()) {
    throw Error(ErrorKind::contract, fmt::format("input dim {} does not match PCA dim {}",
                                                 X.cols(), p.input_dim()));
  }
  return (X.rowwise() - p.mean.transpose()) *
         p.components.topRows(static_cast<Eigen::Index>(d)).transpose();
}

LayerStore project_store(const LayerStore& store, const PCAProjection& p, std::size_t d) {
  if (store.header().dim != p.input_dim()) {
    throw Error(ErrorKind::contract, fmt::format("store dim {} does not match PCA dim {}",
                                                 store.header().dim, p.input_dim()));
  }
  StoreHeader h = store.header();
  h.dim = static_cast<std::uint32_t>(d);
  std::vector<StoreRecord> records;
  records.reserve(store.records().size());
  for (const auto& r : store.records()) {
    records.push_back(
        {r.utterance_id, project(p, r.frames.cast<double>(), d).cast<float>()});
  }
  return LayerStore(std::move(h), std::move(records));
}

Eigen::MatrixXd reconstruct(const PCAProjection& p, const Eigen::MatrixXd& scores) {
  if (scores.cols() < 1 || static_cast<std::size_t>(scores.cols()) > p.available()) {
    throw Error(ErrorKind::contract, "score width exceeds the available components");
  }
  Eigen::MatrixXd out = scores * p.components.topRows(scores.cols());
  out.rowwise() += p.mean.transpose();
  return out;
}

double control_score(const ControlScores& scores) {
  if (scores.empty()) throw Error(ErrorKind::contract, "no layers in control scores");
  double total = 0.0;
  for (const auto& [layer, s] : scores) {
    if (!s.p1 || !s.p2 || !s.n1 || !s.n2) {
      throw Error(ErrorKind::contract,
                  fmt::format("layer {} is missing a positive or negative control score", layer));
    }
    total += *s.p1 + *s.p2 - *s.n1 - *s.n2;
  }
  return total;
}

std::vector<std::size_t> dimension_grid(std::size_t D) {
  if (D < 1) throw Error(ErrorKind::contract, "dimension grid needs D >= 1");
  std::vector<std::size_t> grid;
  for (std::size_t d = 2; d <= D; d *= 2) grid.push_back(d);
  if (grid.empty() || grid.back() != D) grid.push_back(D);
  return grid;
}

SelectionResult select_dim(const std::vector<std::pair<std::size_t, double>>& per_d_scores) {
  if (per_d_scores.empty()) throw Error(ErrorKind::contract, "empty dimension grid");
  SelectionResult r;
  for (const auto& [d, s] : per_d_scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorKind::contract, fmt::format("control score for d = {} is not finite", d));
    }
    if (!r.score.emplace(d, s).second) {
      throw Error(ErrorKind::contract, fmt::format("dimension {} appears twice in the grid", d));
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [d, s] : r.score) {
    r.grid.push_back(d);
    if (s > best) {
      best = s;
      r.d_star = d;
    }
  }
  return r;
}

SelectionResult select_dim(const std::map<std::size_t, double>& per_d_scores) {
  return select_dim(std::vector<std::pair<std::size_t, double>>(per_d_scores.begin(),
                                                                per_d_scores.end()));
}

} // namespace phonoprobe
