#ifndef PHONOPROBE_SYNTH_HPP
#define PHONOPROBE_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "phonoprobe/corpus.hpp"
#include "phonoprobe/reprstore.hpp"

namespace phonoprobe {

struct SynthLayer {
  std::int32_t layer_id = 1;
  /// Distance between the four stop-onset types (P, S+P, B, S+confound),
  /// in units of the token noise.
  double stop_separation = 0.0;

  bool operator==(const SynthLayer&) const = default;
};

/// Synthetic corpus and stores whose structure is known by construction.
///
/// Every phone token gets a latent vector plus Gaussian token noise. The
/// latent has three kinds of coordinates:
///  - planted_k - 2 nuisance coordinates with the largest variance;
///  - the consonant/vowel and stress control features, ranked k-1 and k;
///  - the two distant-phone negative-control features, ranked k+1, k+2;
/// followed, for each place, by three coordinates of a regular simplex
/// separating its stop onset types. Planted coordinates are standardized over
/// all tokens and scaled so their variances strictly decrease in that order.
/// Each layer applies its own random rotation and gain, which PCA and the
/// probe are blind to.
struct SynthSpec {
  std::size_t words_per_type = 20; // per onset type and place
  std::vector<std::string> places{"labial", "alveolar", "velar"};
  std::size_t dim = 24;
  std::size_t planted_k = 4;
  bool control_signal = true;  // plant consonant/vowel and stress features
  bool negative_signal = true; // plant the distant-phone features
  double noise = 0.5;          // token noise standard deviation
  double frame_noise = 0.05;   // per-frame jitter around the token vector
  double hop_s = 0.02;
  std::size_t tail_min = 3, tail_max = 6; // phones after the onset
  std::string model_id = "synthetic";
  std::vector<SynthLayer> layers{{1, 10.0}};

  /// Throws ErrorKind::contract when the planted coordinates do not fit.
  void validate() const;
  bool operator==(const SynthSpec&) const = default;
};

struct SynthData {
  Corpus corpus;
  std::vector<LayerStore> stores; // one per SynthSpec::layers entry
};

SynthData generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

/// Parses a [synth] INI section (see docs/config.md).
SynthSpec parse_synth_spec(std::istream& in, const std::string& source);
SynthSpec load_synth_spec(const std::filesystem::path& path);

/// Writes alignments.tsv, one <model>_<layer>.prst per layer and an
/// experiment.ini pointing at them. Returns the experiment.ini path.
std::filesystem::path write_synthetic(const SynthSpec& spec, const SynthData& data,
                                      const std::filesystem::path& dir);

} // namespace phonoprobe

#endif
