#include "fixtures.hpp"

#include <unistd.h>

#include <fmt/format.h>

namespace fixtures {

std::filesystem::path path(const std::string& name) {
  return std::filesystem::path(PHONOPROBE_FIXTURE_DIR) / name;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             fmt::format("phonoprobe_{}_{}_{}", tag, ::getpid(), counter++);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

phonoprobe::Corpus random_corpus(std::uint64_t seed, std::size_t n_utterances) {
  static const std::vector<std::vector<std::string>> onsets = {
      {"P"}, {"S", "P"}, {"B"}, {"T"}, {"S", "T"}, {"D"}, {"K"}, {"S", "K"},
      {"G"}, {"S", "L"}, {"S", "M"}, {"S", "N"}, {"S", "W"}, {"S", "P", "R"},
      {"L"}, {"AE1"}, {"S"}};
  static const std::vector<std::string> consonants = {"P", "B", "T", "D", "K", "G", "S", "Z",
                                                      "L", "M", "N", "W", "R", "F", "V", "HH"};
  static const std::vector<std::string> vowels = {"IY1", "IY0", "AE1", "AE2", "AH0", "AA1",
                                                  "OW1", "OW0", "EH2", "UW1", "ER0", "AY1"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const auto& v) -> const auto& {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<phonoprobe::Utterance> utts;
  for (std::size_t u = 0; u < n_utterances; ++u) {
    std::vector<std::string> labels = pick(onsets);
    const int tail = std::uniform_int_distribution<int>(0, 7)(rng);
    if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.8) labels.push_back(pick(vowels));
    for (int i = 0; i < tail; ++i) {
      labels.push_back(std::uniform_int_distribution<int>(0, 1)(rng) ? pick(vowels)
                                                                       : pick(consonants));
    }
    phonoprobe::Utterance utt;
    utt.id = fmt::format("r{:04}", u);
    utt.word_form = fmt::format("w{}", u);
    utt.is_pseudoword = (u % 5) == 4;
    double t = 0.03;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      phonoprobe::PhoneToken tok{utt.id, utt.word_form, utt.is_pseudoword, static_cast<int>(i),
                                 labels[i], t, 0.0};
      t += std::uniform_real_distribution<double>(0.03, 0.15)(rng);
      tok.end_s = t;
      utt.tokens.push_back(std::move(tok));
    }
    utts.push_back(std::move(utt));
  }
  return phonoprobe::Corpus(std::move(utts));
}

phonoprobe::LayerStore random_store(std::uint64_t seed, std::size_t n_utterances,
                                    std::uint32_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  phonoprobe::StoreHeader h;
  h.model_id = fmt::format("random-{}", seed);
  h.layer_id = static_cast<std::int32_t>(seed % 20) - 7;
  h.dim = dim;
  h.hop_s = 0.02;
  h.offset_s = 0.0125;
  std::vector<phonoprobe::StoreRecord> recs;
  for (std::size_t u = 0; u < n_utterances; ++u) {
    phonoprobe::StoreRecord r;
    r.utterance_id = fmt::format("utt-{}-\xc3\xa9", u); // non-ASCII UTF-8 on purpose
    const int n_frames = std::uniform_int_distribution<int>(1, 40)(rng);
    r.frames.resize(n_frames, dim);
    for (Eigen::Index i = 0; i < r.frames.size(); ++i) r.frames.data()[i] = normal(rng);
    recs.push_back(std::move(r));
  }
  return phonoprobe::LayerStore(std::move(h), std::move(recs));
}

Clusters gaussian_clusters(const std::vector<std::size_t>& counts, std::size_t dim,
                           double spacing, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Clusters c;
  std::size_t n = 0;
  for (auto k : counts) n += k;
  c.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::size_t row = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i, ++row) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double mean = (j == k % dim) ? spacing : 0.0;
        c.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = mean + normal(rng);
      }
      c.y.push_back(static_cast<int>(k));
    }
  }
  return c;
}

} // namespace fixtures
