#ifndef PHONOPROBE_CONFIG_HPP
#define PHONOPROBE_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "phonoprobe/contrasts.hpp"
#include "phonoprobe/evalmetrics.hpp"

namespace phonoprobe {

struct LayerFile {
  std::int32_t layer_id = 0;
  std::filesystem::path path;

  bool operator==(const LayerFile&) const = default;
};

struct ModelSpec {
  std::string model_id;
  std::vector<LayerFile> layers; // ascending layer_id

  bool operator==(const ModelSpec&) const = default;
};

/// One [contrast.NAME] section: patterns in the DSL, ';'-separated.
struct CustomContrast {
  std::string name;
  std::string place;
  ContrastKind kind = ContrastKind::phonemic;
  std::vector<std::string> group1, group2, confound;

  bool operator==(const CustomContrast&) const = default;
};

enum class PcaMode { off, fixed, select_dstar };
enum class PcaPopulation {
  stimuli, // fit once per layer on every stimulus token of the experiment
  fold,    // fit inside each training split
};

struct CvConfig {
  std::size_t outer_folds = 10;
  std::size_t inner_folds = 5;
  std::vector<double> lambdas; // default_lambda_grid() unless configured
  double tol = 1e-8;
  int max_iter = 10000;
  bool permute_labels = false;

  bool operator==(const CvConfig&) const = default;
};

struct PcaConfig {
  PcaMode mode = PcaMode::off;
  std::size_t dim = 0; // PcaMode::fixed
  PcaPopulation population = PcaPopulation::stimuli;

  bool operator==(const PcaConfig&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output = "phonoprobe_out";
  std::size_t jobs = 1;

  std::filesystem::path alignments;
  bool include_pseudowords = true;

  bool builtin_stops = true;    // phonemic + phonetic per place
  bool builtin_controls = true; // the four control contrasts
  std::vector<std::string> places{"labial", "alveolar", "velar"};
  ConfoundPolicy confound_policy = ConfoundPolicy::drop_own_stop;
  std::vector<CustomContrast> custom;

  CvConfig cv;
  AucVariant variant = AucVariant::one_vs_one;
  PcaConfig pca;

  std::vector<ModelSpec> models;

  /// Built-in specs followed by custom ones, in config order.
  std::vector<ContrastSpec> contrasts() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses INI text; relative paths resolve against `base_dir`. Checks that
/// every referenced file exists.
ExperimentConfig parse_config(std::istream& in, const std::string& source,
                              const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical INI rendering with absolute paths.
void write_config(const ExperimentConfig& config, std::ostream& out);

std::string to_string(PcaMode mode);
std::string to_string(PcaPopulation population);
std::string to_string(AucVariant variant);

} // namespace phonoprobe

#endif
