#ifndef PHONOPROBE_CONTRASTS_HPP
#define PHONOPROBE_CONTRASTS_HPP

#include <string>
#include <vector>

#include "phonoprobe/phonepatterns.hpp"

namespace phonoprobe {

struct Place {
  std::string name;       // labial, alveolar, velar
  std::string voiceless;  // P, T, K
  std::string voiced;     // B, D, G
};

const std::vector<Place>& builtin_places();
const Place& place_by_name(const std::string& name);

enum class ConfoundPolicy {
  drop_own_stop, // remove the row's own voiceless stop from {K,T,L,M,N,W}
  verbatim,      // reuse the labial confound set unchanged
};

/// Confound onsets following word-initial S, before any policy is applied.
const std::vector<std::string>& labial_confound_set();

/// Phonemic and phonetic stop contrasts for one place of articulation. Both
/// use the same three pattern families; only the grouping differs.
ContrastSpec phonemic_stop_contrast(const Place& place, ConfoundPolicy policy);
ContrastSpec phonetic_stop_contrast(const Place& place, ConfoundPolicy policy);

/// Consonant-vs-vowel and primary-vs-no-stress positive controls, then the
/// two distant-phoneme negative controls, in that order.
std::vector<ContrastSpec> control_contrasts();

/// Both stop contrasts for each named place followed by the four controls.
std::vector<ContrastSpec> builtin_contrasts(const std::vector<std::string>& places,
                                            ConfoundPolicy policy);

ContrastSpec make_contrast(std::string name, std::string place, ContrastKind kind,
                           const std::vector<std::string>& group1,
                           const std::vector<std::string>& group2,
                           const std::vector<std::string>& confound);

} // namespace phonoprobe

#endif
