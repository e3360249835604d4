#ifndef PHONOPROBE_TEST_FIXTURES_HPP
#define PHONOPROBE_TEST_FIXTURES_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phonoprobe/corpus.hpp"
#include "phonoprobe/reprstore.hpp"

namespace fixtures {

std::filesystem::path path(const std::string& name);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Random isolated words whose onsets are drawn from the stop/confound
/// families of every place, followed by random consonants and vowels.
phonoprobe::Corpus random_corpus(std::uint64_t seed, std::size_t n_utterances);

phonoprobe::LayerStore random_store(std::uint64_t seed, std::size_t n_utterances,
                                    std::uint32_t dim);

/// Gaussian clusters: `counts[c]` samples around spacing * e_c (pairwise
/// mean distance spacing * sqrt(2)).
struct Clusters {
  Eigen::MatrixXd X;
  std::vector<int> y;
};
Clusters gaussian_clusters(const std::vector<std::size_t>& counts, std::size_t dim,
                           double spacing, double sigma, std::uint64_t seed);

} // namespace fixtures

#endif
