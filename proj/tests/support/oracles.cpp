#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace oracle {

namespace {

bool oracle_is_vowel(const std::string& label) {
  static const std::set<std::string> vowels = {"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                                               "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
  std::string base = label;
  while (!base.empty() && std::isdigit(static_cast<unsigned char>(base.back()))) base.pop_back();
  return vowels.count(base) > 0;
}

char stress_digit(const std::string& label) {
  return std::isdigit(static_cast<unsigned char>(label.back())) ? label.back() : '\0';
}

bool literal_ok(const std::string& symbol, const std::string& label) {
  if (symbol == label) return true;
  // A digitless symbol names every stress variant of that base.
  return !std::isdigit(static_cast<unsigned char>(symbol.back())) && label.size() == symbol.size() + 1 &&
         label.compare(0, symbol.size(), symbol) == 0 &&
         std::isdigit(static_cast<unsigned char>(label.back()));
}

bool slot_ok(const phonoprobe::Slot& slot, const std::string& label) {
  using phonoprobe::SlotKind;
  switch (slot.kind) {
    case SlotKind::wildcard: return true;
    case SlotKind::any_consonant: return !oracle_is_vowel(label);
    case SlotKind::any_vowel: return oracle_is_vowel(label);
    case SlotKind::vowel_with_stress:
      return oracle_is_vowel(label) && stress_digit(label) == static_cast<char>('0' + slot.stress);
    case SlotKind::literal: return literal_ok(slot.symbols[0], label);
    case SlotKind::set:
      for (const auto& s : slot.symbols) {
        if (literal_ok(s, label)) return true;
      }
      return false;
  }
  return false;
}

} // namespace

double pair_count_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

std::vector<MatchKey> brute_force_match(const phonoprobe::Corpus& corpus,
                                        const phonoprobe::ContrastSpec& spec) {
  std::vector<MatchKey> out;
  const std::vector<const std::vector<phonoprobe::CompiledPattern>*> groups = {
      &spec.group1, &spec.group2, &spec.confound};
  for (const auto& u : corpus.utterances()) {
    const auto& toks = u.tokens;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (const auto& p : *groups[g]) {
        for (std::size_t start = 0; start < toks.size(); ++start) {
          if (p.anchored_at_word_start && start != 0) continue;
          if (start + p.slots.size() > toks.size()) continue;
          bool ok = true;
          for (std::size_t k = 0; k < p.slots.size() && ok; ++k) {
            ok = slot_ok(p.slots[k], toks[start + k].label);
          }
          if (ok) {
            out.emplace_back(u.id, toks[start + p.target_index].index_in_word,
                             static_cast<int>(g));
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (std::get<0>(out[i]) == std::get<0>(out[i - 1]) &&
        std::get<1>(out[i]) == std::get<1>(out[i - 1])) {
      throw std::runtime_error("oracle: token claimed by two groups");
    }
  }
  return out;
}

Eigen::VectorXd finite_difference_gradient(const phonoprobe::probe_detail::Problem& problem,
                                           const Eigen::VectorXd& params, double h) {
  Eigen::VectorXd g(params.size());
  Eigen::VectorXd x = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    x(i) = params(i) + h;
    const double up = phonoprobe::probe_detail::objective(problem, x, nullptr);
    x(i) = params(i) - h;
    const double down = phonoprobe::probe_detail::objective(problem, x, nullptr);
    x(i) = params(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

std::optional<Eigen::VectorXd> scan_pool(const phonoprobe::LayerStore& store,
                                         const phonoprobe::PhoneToken& token) {
  const auto* rec = store.find(token.utterance_id);
  if (!rec) throw std::runtime_error("oracle: utterance missing");
  const auto& h = store.header();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(h.dim);
  int count = 0;
  for (Eigen::Index t = 0; t < rec->frames.rows(); ++t) {
    const double fs = h.offset_s + static_cast<double>(t) * h.hop_s;
    const double fe = fs + h.hop_s;
    if (std::min(fe, token.end_s) - std::max(fs, token.start_s) > 1e-12) {
      sum += rec->frames.row(t).cast<double>().transpose();
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

} // namespace oracle
