#include "phonoprobe/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <Eigen/QR>
#include <fmt/format.h>

#include "ini.hpp"
#include "phonoprobe/contrasts.hpp"
#include "phonoprobe/error.hpp"

namespace phonoprobe {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kVowels{"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                                       "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
const std::vector<std::string> kTailConsonants{"P", "B", "T", "D", "K",  "G",  "F", "V",
                                               "S", "Z", "M", "N", "L",  "R",  "W", "Y",
                                               "HH", "SH", "CH", "JH", "TH", "NG"};
const std::vector<std::string> kConfoundOnsets{"L", "M", "N", "W"}; // in every place's set

constexpr double kRankRatio = 1.35; // standard-deviation ratio between adjacent ranks
constexpr double kFloor = 3.0;      // lowest planted sd, in units of the token noise

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Onset types of a stop word; see the stop patterns in contrasts.cpp.
enum OnsetType { plain_voiceless = 0, s_voiceless = 1, voiced = 2, s_confound = 3 };

struct Token {
  std::string label;
  std::size_t frames = 0;
  int onset_type = -1; // set on the stop/confound target of the onset
  std::size_t place = 0;
};

struct Word {
  std::vector<Token> tokens;
};

bool is_vowel_label(const std::string& label) {
  return std::isdigit(static_cast<unsigned char>(label.back())) != 0;
}

class WordMaker {
public:
  WordMaker(const SynthSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {}

  Word make(const Place& place, std::size_t place_index, OnsetType type) {
    Word w;
    place_ = place_index;
    switch (type) {
    case plain_voiceless:
      push(w, place.voiceless, type);
      break;
    case s_voiceless:
      push(w, "S");
      push(w, place.voiceless, type);
      break;
    case voiced:
      push(w, place.voiced, type);
      break;
    case s_confound:
      push(w, "S");
      push(w, pick(kConfoundOnsets), type);
      break;
    }
    push(w, vowel());
    std::uniform_int_distribution<std::size_t> len(spec_.tail_min, spec_.tail_max);
    const auto n = len(rng_);
    std::bernoulli_distribution is_vowel(0.5);
    for (std::size_t i = 0; i < n; ++i) push(w, is_vowel(rng_) ? vowel() : pick(kTailConsonants));
    return w;
  }

private:
  void push(Word& w, std::string label, int onset_type = -1) {
    std::uniform_int_distribution<std::size_t> frames(2, 5);
    w.tokens.push_back({std::move(label), frames(rng_), onset_type, place_});
  }

  std::string vowel() {
    std::discrete_distribution<int> stress({0.4, 0.5, 0.1});
    const int s = stress(rng_);
    return pick(kVowels) + static_cast<char>('0' + s);
  }

  const std::string& pick(const std::vector<std::string>& v) {
    std::uniform_int_distribution<std::size_t> i(0, v.size() - 1);
    return v[i(rng_)];
  }

  const SynthSpec& spec_;
  std::mt19937_64& rng_;
  std::size_t place_ = 0;
};

// Centers and scales a feature column to unit variance; constant columns
// become zero.
void standardize(Eigen::Ref<Eigen::VectorXd> v) {
  v.array() -= v.mean();
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (sd > 0.0) v /= sd;
}

Eigen::MatrixXd random_rotation(std::size_t D, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd G(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
  for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = z(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  // Fix the column signs so Q does not depend on QR sign conventions.
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  }
  return Q;
}

std::size_t planted_count(const SynthSpec& s) { return s.planted_k + 2; }
std::size_t simplex_count(const SynthSpec& s) { return 3 * s.places.size(); }

} // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::contract, "synth: " + what); };
  if (words_per_type < 3) fail("words_per_type must be at least 3");
  if (places.empty()) fail("at least one place is required");
  std::set<std::string> seen_places;
  for (const auto& p : places) {
    place_by_name(p);
    if (!seen_places.insert(p).second) fail(fmt::format("place '{}' listed twice", p));
  }
  if (dim < 2) fail("dim must be at least 2");
  if (planted_k < 2) fail("planted_k must be at least 2");
  if (planted_count(*this) + simplex_count(*this) > dim) {
    fail(fmt::format("planted_k = {} with {} places needs dim >= {} (k + 2 control coordinates "
                     "and a 3-coordinate stop simplex per place), got {}",
                     planted_k, places.size(), planted_count(*this) + simplex_count(*this), dim));
  }
  if (!(noise > 0.0) || !(frame_noise >= 0.0)) fail("noise must be > 0 and frame_noise >= 0");
  if (!(hop_s > 0.0)) fail("hop_s must be positive");
  if (tail_min > tail_max) fail("tail_min exceeds tail_max");
  if (layers.empty()) fail("at least one layer is required");
  std::set<std::int32_t> ids;
  for (const auto& l : layers) {
    if (!ids.insert(l.layer_id).second) fail(fmt::format("layer {} listed twice", l.layer_id));
    if (!(l.stop_separation >= 0.0)) fail("stop_separation must be >= 0");
  }
}

SynthData generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);

  std::vector<Word> words;
  WordMaker maker(spec, rng);
  for (std::size_t p = 0; p < spec.places.size(); ++p) {
    const auto& place = place_by_name(spec.places[p]);
    for (int type = 0; type < 4; ++type) {
      for (std::size_t i = 0; i < spec.words_per_type; ++i) {
        words.push_back(maker.make(place, p, static_cast<OnsetType>(type)));
      }
    }
  }
  // Interleave so utterance order does not follow onset type.
  std::shuffle(words.begin(), words.end(), rng);

  std::size_t n_tokens = 0;
  for (const auto& w : words) n_tokens += w.tokens.size();
  const auto N = static_cast<Eigen::Index>(n_tokens);
  const auto R = static_cast<Eigen::Index>(planted_count(spec));
  const auto k = static_cast<Eigen::Index>(spec.planted_k);

  // Planted coordinates in rank order: nuisance, cv, stress, before, after.
  Eigen::MatrixXd planted = Eigen::MatrixXd::Zero(N, R);
  // Each place has its own simplex, so an S+stop onset of one place is not
  // confused with the S+stop onset of another (a confound there).
  const auto S = static_cast<Eigen::Index>(simplex_count(spec));
  Eigen::MatrixXd simplex_vertex = Eigen::MatrixXd::Zero(N, S);
  const Eigen::Matrix<double, 4, 3> vertices =
      (Eigen::Matrix<double, 4, 3>() << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1).finished();
  {
    std::normal_distribution<double> z;
    Eigen::Index row = 0;
    for (const auto& w : words) {
      const auto n = w.tokens.size();
      for (std::size_t i = 0; i < n; ++i, ++row) {
        const auto& t = w.tokens[i];
        const bool vowel = is_vowel_label(t.label);
        for (Eigen::Index j = 0; j < k - 2; ++j) planted(row, j) = z(rng);
        if (spec.control_signal) {
          planted(row, k - 2) = vowel ? -1.0 : 1.0;
          if (vowel && t.label.back() != '2') planted(row, k - 1) = t.label.back() == '1' ? 1.0 : -1.0;
        }
        if (spec.negative_signal && vowel) {
          if (i >= 4) planted(row, k) = is_vowel_label(w.tokens[i - 4].label) ? -1.0 : 1.0;
          if (i + 4 < n) planted(row, k + 1) = is_vowel_label(w.tokens[i + 4].label) ? -1.0 : 1.0;
        }
        if (t.onset_type >= 0) {
          simplex_vertex.block(row, 3 * static_cast<Eigen::Index>(t.place), 1, 3) =
              vertices.row(t.onset_type);
        }
      }
    }
  }
  for (Eigen::Index j = 0; j < R; ++j) {
    standardize(planted.col(j));
    planted.col(j) *= spec.noise * kFloor * std::pow(kRankRatio, static_cast<double>(R - 1 - j));
  }

  SynthData out;
  std::vector<Utterance> utterances;
  {
    std::size_t u = 0;
    for (const auto& w : words) {
      Utterance utt;
      utt.id = fmt::format("syn{:05d}", u++);
      utt.word_form = utt.id;
      std::size_t frame = 0;
      for (std::size_t i = 0; i < w.tokens.size(); ++i) {
        const auto& t = w.tokens[i];
        utt.tokens.push_back({utt.id, utt.word_form, false, static_cast<int>(i), t.label,
                              static_cast<double>(frame) * spec.hop_s,
                              static_cast<double>(frame + t.frames) * spec.hop_s});
        frame += t.frames;
      }
      utterances.push_back(std::move(utt));
    }
  }
  out.corpus = Corpus(std::move(utterances));

  const auto D = static_cast<Eigen::Index>(spec.dim);
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& layer = spec.layers[li];
    std::mt19937_64 lrng(mix(seed, li + 1));
    std::normal_distribution<double> z;
    const Eigen::MatrixXd Q = random_rotation(spec.dim, lrng);
    const double gain = 1.0 + 0.25 * static_cast<double>(li);
    const double side = layer.stop_separation * spec.noise / (2.0 * std::sqrt(2.0));

    StoreHeader h{spec.model_id, layer.layer_id, static_cast<std::uint32_t>(spec.dim), spec.hop_s,
                  0.0};
    std::vector<StoreRecord> records;
    Eigen::Index row = 0;
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
      const auto& w = words[wi];
      std::size_t total = 0;
      for (const auto& t : w.tokens) total += t.frames;
      StoreRecord rec;
      rec.utterance_id = out.corpus.utterances()[wi].id;
      rec.frames.resize(static_cast<Eigen::Index>(total), D);
      Eigen::Index f = 0;
      for (const auto& t : w.tokens) {
        Eigen::VectorXd latent = Eigen::VectorXd::Zero(D);
        latent.head(R) = planted.row(row).transpose();
        latent.segment(R, S) = side * simplex_vertex.row(row).transpose();
        for (Eigen::Index j = 0; j < D; ++j) latent(j) += spec.noise * z(lrng);
        const Eigen::VectorXd x = gain * (Q * latent);
        for (std::size_t m = 0; m < t.frames; ++m, ++f) {
          for (Eigen::Index j = 0; j < D; ++j) {
            rec.frames(f, j) = static_cast<float>(x(j) + gain * spec.frame_noise * z(lrng));
          }
        }
        ++row;
      }
      records.push_back(std::move(rec));
    }
    out.stores.emplace_back(std::move(h), std::move(records));
  }
  return out;
}

SynthSpec parse_synth_spec(std::istream& in, const std::string& source) {
  const auto tree = ini::read(in, source);
  for (const auto& [name, section] : tree) {
    if (name != "synth") {
      throw Error(ErrorKind::validation, fmt::format("{}: unknown section [{}]", source, name));
    }
  }
  auto s = ini::section(tree, source, "synth");
  SynthSpec spec;
  spec.words_per_type = s.get_int<std::size_t>("words_per_type", spec.words_per_type);
  spec.places = s.get_list("places", ',', spec.places);
  spec.dim = s.get_int<std::size_t>("dim", spec.dim);
  spec.planted_k = s.get_int<std::size_t>("planted_k", spec.planted_k);
  spec.control_signal = s.get_bool("control_signal", spec.control_signal);
  spec.negative_signal = s.get_bool("negative_signal", spec.negative_signal);
  spec.noise = s.get_double("noise", spec.noise);
  spec.frame_noise = s.get_double("frame_noise", spec.frame_noise);
  spec.hop_s = s.get_double("hop_s", spec.hop_s);
  spec.tail_min = s.get_int<std::size_t>("tail_min", spec.tail_min);
  spec.tail_max = s.get_int<std::size_t>("tail_max", spec.tail_max);
  spec.model_id = s.get_string("model_id", spec.model_id);
  if (s.has("layers")) {
    spec.layers.clear();
    for (const auto& item : s.get_list("layers", ',', {})) {
      const auto parts = text::split(item, ':');
      const auto id = text::parse_int<std::int32_t>(parts[0]);
      const auto sep = parts.size() == 2 ? text::parse_double(parts[1]) : std::nullopt;
      if (!id || !sep) {
        throw s.error(ErrorKind::parse,
                      fmt::format("layer entry '{}' is not LAYER_ID:STOP_SEPARATION", item));
      }
      spec.layers.push_back({*id, *sep});
    }
  }
  s.finish();
  return spec;
}

SynthSpec load_synth_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open synth spec '{}'", path.string()));
  return parse_synth_spec(in, path.string());
}

fs::path write_synthetic(const SynthSpec& spec, const SynthData& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  }
  write_alignments(data.corpus, dir / "alignments.tsv");
  std::vector<std::string> layer_lines;
  for (const auto& store : data.stores) {
    const auto name = fmt::format("{}_{}.prst", store.header().model_id, store.header().layer_id);
    write_store(store, dir / name);
    layer_lines.push_back(fmt::format("{} = {}", store.header().layer_id, name));
  }
  const auto ini_path = dir / "experiment.ini";
  std::ofstream out(ini_path);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", ini_path.string()));
  out << "[experiment]\nseed = 0\noutput = results\n\n"
      << "[corpus]\nalignments = alignments.tsv\n\n"
      << "[contrasts]\nplaces = ";
  for (std::size_t i = 0; i < spec.places.size(); ++i) out << (i ? ", " : "") << spec.places[i];
  out << "\n\n[model." << spec.model_id << "]\n";
  for (const auto& l : layer_lines) out << l << '\n';
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", ini_path.string()));
  return ini_path;
}

} // namespace phonoprobe
