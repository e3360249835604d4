#include "phonoprobe/contrasts.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "phonoprobe/error.hpp"

namespace phonoprobe {

namespace {

std::string confound_pattern(const Place& place, ConfoundPolicy policy) {
  std::vector<std::string> onsets;
  for (const auto& s : labial_confound_set()) {
    if (policy == ConfoundPolicy::drop_own_stop && s == place.voiceless) continue;
    onsets.push_back(s);
  }
  return fmt::format("# S ({{{}}}) V", fmt::join(onsets, ","));
}

} // namespace

const std::vector<Place>& builtin_places() {
  static const std::vector<Place> places = {
      {"labial", "P", "B"},
      {"alveolar", "T", "D"},
      {"velar", "K", "G"},
  };
  return places;
}

const Place& place_by_name(const std::string& name) {
  for (const auto& p : builtin_places()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::contract, fmt::format("unknown place of articulation '{}'", name));
}

const std::vector<std::string>& labial_confound_set() {
  static const std::vector<std::string> set = {"K", "T", "L", "M", "N", "W"};
  return set;
}

ContrastSpec make_contrast(std::string name, std::string place, ContrastKind kind,
                           const std::vector<std::string>& group1,
                           const std::vector<std::string>& group2,
                           const std::vector<std::string>& confound) {
  ContrastSpec spec;
  spec.name = std::move(name);
  spec.place = std::move(place);
  spec.kind = kind;
  for (const auto& t : group1) spec.group1.push_back(compile(t));
  for (const auto& t : group2) spec.group2.push_back(compile(t));
  for (const auto& t : confound) spec.confound.push_back(compile(t));
  spec.validate();
  return spec;
}

ContrastSpec phonemic_stop_contrast(const Place& place, ConfoundPolicy policy) {
  const auto& p = place.voiceless;
  return make_contrast("phonemic", place.name, ContrastKind::phonemic,
                       {fmt::format("# ({}) V", p), fmt::format("# S ({}) V", p)},
                       {fmt::format("# ({}) V", place.voiced)},
                       {confound_pattern(place, policy)});
}

ContrastSpec phonetic_stop_contrast(const Place& place, ConfoundPolicy policy) {
  const auto& p = place.voiceless;
  return make_contrast("phonetic", place.name, ContrastKind::phonetic,
                       {fmt::format("# ({}) V", p)},
                       {fmt::format("# S ({}) V", p), fmt::format("# ({}) V", place.voiced)},
                       {confound_pattern(place, policy)});
}

std::vector<ContrastSpec> control_contrasts() {
  return {
      make_contrast("consonant_vowel", "", ContrastKind::positive_control, {"(C)"}, {"(V)"}, {}),
      make_contrast("stress", "", ContrastKind::positive_control, {"(V1)"}, {"(V0)"}, {}),
      make_contrast("distant_before", "", ContrastKind::negative_control, {"C X X X (V)"},
                    {"V X X X (V)"}, {}),
      make_contrast("distant_after", "", ContrastKind::negative_control, {"(V) X X X C"},
                    {"(V) X X X V"}, {}),
  };
}

std::vector<ContrastSpec> builtin_contrasts(const std::vector<std::string>& places,
                                            ConfoundPolicy policy) {
  std::vector<ContrastSpec> out;
  for (const auto& name : places) {
    const auto& place = place_by_name(name);
    out.push_back(phonemic_stop_contrast(place, policy));
    out.push_back(phonetic_stop_contrast(place, policy));
  }
  auto controls = control_contrasts();
  out.insert(out.end(), controls.begin(), controls.end());
  return out;
}

} // namespace phonoprobe
