// Brute-force reference implementations used only by tests. Each one takes
// a different route from the production code it checks.
#ifndef PHONOPROBE_TEST_ORACLES_HPP
#define PHONOPROBE_TEST_ORACLES_HPP

#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "phonoprobe/corpus.hpp"
#include "phonoprobe/phonepatterns.hpp"
#include "phonoprobe/probe.hpp"
#include "phonoprobe/reprstore.hpp"

namespace oracle {

/// O(n^2) pair counting, ties 1/2.
double pair_count_auc(const std::vector<double>& scores, const std::vector<bool>& positive);

/// (utterance_id, index_in_word, group) triples found by checking every
/// pattern at every position with string-level slot tests.
using MatchKey = std::tuple<std::string, int, int>;
std::vector<MatchKey> brute_force_match(const phonoprobe::Corpus& corpus,
                                        const phonoprobe::ContrastSpec& spec);

/// Central differences of the probe objective.
Eigen::VectorXd finite_difference_gradient(const phonoprobe::probe_detail::Problem& problem,
                                           const Eigen::VectorXd& params, double h);

/// Mean of frames whose interval overlaps [start, end) by more than 1e-12 s,
/// found by scanning every frame. Empty optional when none overlap.
std::optional<Eigen::VectorXd> scan_pool(const phonoprobe::LayerStore& store,
                                         const phonoprobe::PhoneToken& token);

} // namespace oracle

#endif
