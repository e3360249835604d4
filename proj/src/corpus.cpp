#include "phonoprobe/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "phonoprobe/error.hpp"
#include "text.hpp"

namespace phonoprobe {

namespace {

constexpr std::array<const char*, 15> kVowelBases = {
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
    "EY", "IH", "IY", "OW", "OY", "UH", "UW"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void validate_utterance(const Utterance& u) {
  if (u.tokens.empty()) {
    throw Error(ErrorKind::validation, fmt::format("utterance '{}' has no phones", u.id));
  }
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    const auto& t = u.tokens[i];
    if (!(t.end_s > t.start_s) || t.start_s < 0.0) {
      throw Error(ErrorKind::validation,
                  fmt::format("utterance '{}': phone {} '{}' has invalid interval [{}, {})",
                              u.id, i, t.label, t.start_s, t.end_s));
    }
    if (t.utterance_id != u.id || t.word_form != u.word_form ||
        t.is_pseudoword != u.is_pseudoword) {
      throw Error(ErrorKind::validation,
                  fmt::format("utterance '{}': inconsistent word fields on phone {}", u.id, i));
    }
    if (t.index_in_word != static_cast<int>(i)) {
      throw Error(ErrorKind::validation,
                  fmt::format("utterance '{}': phone indices are not contiguous", u.id));
    }
    if (i > 0 && t.start_s < u.tokens[i - 1].end_s) {
      throw Error(ErrorKind::validation,
                  fmt::format("utterance '{}': phones {} and {} overlap", u.id, i - 1, i));
    }
  }
}

} // namespace

Corpus::Corpus(std::vector<Utterance> utterances) : utterances_(std::move(utterances)) {
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const auto& u = utterances_[i];
    validate_utterance(u);
    if (!index_.emplace(u.id, i).second) {
      throw Error(ErrorKind::validation, fmt::format("duplicate utterance id '{}'", u.id));
    }
    (u.is_pseudoword ? pseudowords_ : words_) += 1;
  }
}

const Utterance* Corpus::find(const std::string& utterance_id) const {
  const auto it = index_.find(utterance_id);
  return it == index_.end() ? nullptr : &utterances_[it->second];
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& u : utterances_) n += u.tokens.size();
  return n;
}

Corpus Corpus::words_only() const {
  std::vector<Utterance> kept;
  for (const auto& u : utterances_) {
    if (!u.is_pseudoword) kept.push_back(u);
  }
  return Corpus(std::move(kept));
}

bool is_silence_label(const std::string& label) {
  const auto l = lower(label);
  return l.empty() || l == "sil" || l == "sp" || l == "spn" || l == "pau";
}

Corpus parse_alignments(std::istream& in, const std::string& source_name, LoadStats* stats) {
  struct Row {
    PhoneToken token;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows_by_utt;
  LoadStats local;

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != kAlignmentHeader) {
        throw Error(ErrorKind::parse,
                    fmt::format("{}:{}: expected header '{}'", source_name, line_no,
                                kAlignmentHeader));
      }
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != 7) {
      throw Error(ErrorKind::parse, fmt::format("{}:{}: expected 7 tab-separated fields, got {}",
                                                source_name, line_no, fields.size()));
    }
    PhoneToken t;
    t.utterance_id = std::string(fields[0]);
    t.word_form = std::string(fields[1]);
    const auto pseudo = fields[2] == "0" ? std::optional<bool>(false)
                        : fields[2] == "1" ? std::optional<bool>(true)
                                           : std::nullopt;
    const auto index = text::parse_int<int>(fields[3]);
    t.label = std::string(text::trim(fields[4]));
    const auto start = text::parse_double(fields[5]);
    const auto end = text::parse_double(fields[6]);
    if (t.utterance_id.empty()) {
      throw Error(ErrorKind::parse, fmt::format("{}:{}: empty utterance_id", source_name, line_no));
    }
    if (!pseudo) {
      throw Error(ErrorKind::parse,
                  fmt::format("{}:{}: is_pseudoword must be 0 or 1", source_name, line_no));
    }
    if (!index || *index < 0) {
      throw Error(ErrorKind::parse,
                  fmt::format("{}:{}: index_in_word is not a non-negative integer", source_name,
                              line_no));
    }
    if (!start || !end) {
      throw Error(ErrorKind::parse,
                  fmt::format("{}:{}: non-numeric time field", source_name, line_no));
    }
    t.is_pseudoword = *pseudo;
    t.index_in_word = *index;
    t.start_s = *start;
    t.end_s = *end;
    ++local.rows;
    if (is_silence_label(t.label)) {
      ++local.dropped_silence;
      continue;
    }
    auto [it, inserted] = rows_by_utt.try_emplace(t.utterance_id);
    if (inserted) order.push_back(t.utterance_id);
    it->second.push_back({std::move(t), line_no});
  }
  if (!header_seen) {
    throw Error(ErrorKind::parse, fmt::format("{}: missing header row", source_name));
  }

  std::vector<Utterance> utterances;
  utterances.reserve(order.size());
  for (const auto& id : order) {
    auto& rows = rows_by_utt[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.token.start_s < b.token.start_s;
    });
    Utterance u;
    u.id = id;
    u.word_form = rows.front().token.word_form;
    u.is_pseudoword = rows.front().token.is_pseudoword;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& t = rows[i].token;
      if (!(t.end_s > t.start_s)) {
        throw Error(ErrorKind::validation,
                    fmt::format("utterance '{}' ({}:{}): end_s {} is not after start_s {}", id,
                                source_name, rows[i].line, t.end_s, t.start_s));
      }
      if (i > 0 && rows[i - 1].token.index_in_word >= t.index_in_word) {
        throw Error(ErrorKind::validation,
                    fmt::format("utterance '{}': index_in_word disagrees with time order", id));
      }
      if (t.word_form != u.word_form || t.is_pseudoword != u.is_pseudoword) {
        throw Error(ErrorKind::validation,
                    fmt::format("utterance '{}' ({}:{}): inconsistent word fields", id,
                                source_name, rows[i].line));
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto t = std::move(rows[i].token);
      // Indices are renumbered so that dropped silences leave no gaps.
      t.index_in_word = static_cast<int>(i);
      u.tokens.push_back(std::move(t));
    }
    utterances.push_back(std::move(u));
  }
  if (stats) *stats = local;
  return Corpus(std::move(utterances));
}

Corpus load_alignments(const std::filesystem::path& path, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, fmt::format("cannot open alignment file '{}'", path.string()));
  }
  return parse_alignments(in, path.string(), stats);
}

void write_alignments(const Corpus& corpus, std::ostream& out) {
  out << kAlignmentHeader << '\n';
  for (const auto& u : corpus.utterances()) {
    for (const auto& t : u.tokens) {
      out << t.utterance_id << '\t' << t.word_form << '\t' << (t.is_pseudoword ? '1' : '0')
          << '\t' << t.index_in_word << '\t' << t.label << '\t'
          << text::format_double(t.start_s) << '\t' << text::format_double(t.end_s) << '\n';
    }
  }
}

void write_alignments(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::io, fmt::format("cannot write alignment file '{}'", path.string()));
  }
  write_alignments(corpus, out);
}

bool is_vowel_base(const std::string& base) {
  return std::find_if(kVowelBases.begin(), kVowelBases.end(),
                      [&](const char* v) { return base == v; }) != kVowelBases.end();
}

PhoneClass classify_label(const std::string& label) {
  if (label.empty()) throw Error(ErrorKind::classification, "empty phone label");
  PhoneClass pc;
  const char last = label.back();
  if (std::isdigit(static_cast<unsigned char>(last))) {
    pc.base = label.substr(0, label.size() - 1);
    if (!is_vowel_base(pc.base) || last > '2') {
      throw Error(ErrorKind::classification,
                  fmt::format("label '{}' carries a stress digit but '{}' is not a vowel", label,
                              pc.base));
    }
    pc.kind = PhoneKind::vowel;
    pc.stress = static_cast<Stress>(last - '0');
    return pc;
  }
  for (char c : label) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      throw Error(ErrorKind::classification, fmt::format("malformed label '{}'", label));
    }
  }
  pc.base = label;
  pc.kind = is_vowel_base(label) ? PhoneKind::vowel : PhoneKind::consonant;
  return pc;
}

const PhoneClass& Inventory::at(const std::string& label) const {
  const auto* pc = find(label);
  if (!pc) {
    throw Error(ErrorKind::classification, fmt::format("label '{}' is not in the inventory", label));
  }
  return *pc;
}

const PhoneClass* Inventory::find(const std::string& label) const {
  const auto it = classes_.find(label);
  return it == classes_.end() ? nullptr : &it->second;
}

void Inventory::add(const std::string& label) {
  if (classes_.count(label)) return;
  classes_.emplace(label, classify_label(label));
}

Inventory build_inventory(const Corpus& corpus) {
  if (corpus.empty()) throw Error(ErrorKind::contract, "cannot build an inventory of an empty corpus");
  Inventory inv;
  for (const auto& u : corpus.utterances()) {
    for (const auto& t : u.tokens) inv.add(t.label);
  }
  return inv;
}

} // namespace phonoprobe
