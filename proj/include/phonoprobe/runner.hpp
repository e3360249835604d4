#ifndef PHONOPROBE_RUNNER_HPP
#define PHONOPROBE_RUNNER_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phonoprobe/config.hpp"
#include "phonoprobe/dimselect.hpp"
#include "phonoprobe/phonepatterns.hpp"
#include "phonoprobe/reprstore.hpp"

namespace phonoprobe {

inline constexpr const char* kMeanPlace = "mean";

/// One results row. `place` is a place name, "mean", or empty for
/// place-independent contrasts. Pair AUCs are NaN when undefined (two-class
/// contrasts have no confound pairs; one-vs-rest reports no pairs).
struct ResultRow {
  std::string model_id;
  std::int32_t layer_id = 0;
  std::string contrast;
  std::string place;
  ContrastKind kind = ContrastKind::phonemic;
  std::size_t d = 0;
  std::size_t n_samples = 0;
  std::size_t n_group1 = 0, n_group2 = 0, n_confound = 0;
  double auc_weighted = 0.0;
  double auc_12 = 0.0, auc_1c = 0.0, auc_2c = 0.0;
  std::vector<double> lambdas; // chosen per outer fold; empty on mean rows

  bool operator==(const ResultRow&) const;
};

struct ResultsTable {
  std::vector<ResultRow> rows;

  const ResultRow* find(const std::string& model_id, std::int32_t layer_id,
                        const std::string& contrast, const std::string& place) const;
};

/// Control-score search for one model.
struct ModelSelection {
  std::string model_id;
  std::map<std::size_t, ControlScores> scores; // d -> per-layer controls
  SelectionResult result;
};

struct ExperimentResult {
  ResultsTable table;
  std::vector<ModelSelection> selections; // pca = select_dstar only
  std::vector<std::string> log;           // deterministic run log lines
};

struct MatchedContrast {
  ContrastSpec spec;
  std::vector<TargetToken> targets;
};

/// Loads the corpus (minus pseudowords when configured) and matches every
/// configured contrast.
std::vector<MatchedContrast> match_contrasts(const ExperimentConfig& config);

/// Pooled vectors of every stimulus token at one layer, in target order.
struct PooledLayer {
  std::string model_id;
  std::int32_t layer_id = 0;
  std::vector<PhoneToken> tokens;
  Eigen::MatrixXd values;            // rows aligned with tokens; undefined where skipped
  std::vector<std::string> skipped;  // reason per token, empty when pooled
};

std::vector<PooledLayer> pool_stimuli(const ExperimentConfig& config);

/// Runs the control contrasts over the dimension grid of each model.
std::vector<ModelSelection> select_dimensions(const ExperimentConfig& config);

/// Full experiment: optional d* search, then every contrast at every layer.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Appends a mean row after each group of place rows sharing model, layer
/// and contrast.
void add_mean_rows(ResultsTable& table);

} // namespace phonoprobe

#endif
