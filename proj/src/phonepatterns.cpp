#include "phonoprobe/phonepatterns.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <fmt/format.h>

#include "phonoprobe/error.hpp"

namespace phonoprobe {

namespace {

class PatternParser {
public:
  explicit PatternParser(const std::string& text) : text_(text) {}

  CompiledPattern parse() {
    CompiledPattern p;
    skip_space();
    if (peek() == '#') {
      p.anchored_at_word_start = true;
      ++pos_;
    }
    std::optional<std::size_t> target;
    while (true) {
      skip_space();
      if (at_end()) break;
      const std::size_t slot_start = pos_;
      bool is_target = false;
      if (peek() == '(') {
        is_target = true;
        ++pos_;
        skip_space();
      }
      Slot slot = parse_atom();
      if (is_target) {
        skip_space();
        if (peek() != ')') fail(pos_, "expected ')' closing the target slot");
        ++pos_;
        if (target) fail(slot_start, "more than one target slot");
        target = p.slots.size();
      }
      if (!at_end() && !std::isspace(static_cast<unsigned char>(peek()))) {
        fail(pos_, fmt::format("unexpected character '{}'", peek()));
      }
      p.slots.push_back(std::move(slot));
    }
    if (p.slots.empty()) fail(pos_, "pattern has no slots");
    if (!target) fail(0, "no target slot; wrap exactly one slot in '( )'");
    p.target_index = *target;
    return p;
  }

private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
    throw Error(ErrorKind::parse,
                fmt::format("pattern '{}' at column {}: {}", text_, at + 1, msg));
  }

  std::string read_symbol() {
    const std::size_t start = pos_;
    while (!at_end() && std::isupper(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) {
      fail(start, at_end() ? "unexpected end of pattern"
                           : fmt::format("unknown slot token starting with '{}'", peek()));
    }
    if (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void check_literal(const std::string& sym, std::size_t at) const {
    if (std::isdigit(static_cast<unsigned char>(sym.back()))) {
      const auto base = sym.substr(0, sym.size() - 1);
      if (!is_vowel_base(base) || sym.back() > '2') {
        fail(at, fmt::format("unknown slot token '{}'", sym));
      }
    }
  }

  Slot parse_atom() {
    Slot slot;
    const std::size_t start = pos_;
    if (peek() == '{') {
      ++pos_;
      slot.kind = SlotKind::set;
      while (true) {
        skip_space();
        const std::size_t sym_at = pos_;
        auto sym = read_symbol();
        check_literal(sym, sym_at);
        slot.symbols.push_back(std::move(sym));
        skip_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == '}') {
          ++pos_;
          break;
        }
        fail(pos_, "expected ',' or '}' in symbol set");
      }
      return slot;
    }
    auto sym = read_symbol();
    if (sym == "C") {
      slot.kind = SlotKind::any_consonant;
    } else if (sym == "V") {
      slot.kind = SlotKind::any_vowel;
    } else if (sym == "V0" || sym == "V1") {
      slot.kind = SlotKind::vowel_with_stress;
      slot.stress = sym[1] - '0';
    } else if (sym == "X") {
      slot.kind = SlotKind::wildcard;
    } else {
      check_literal(sym, start);
      slot.kind = SlotKind::literal;
      slot.symbols.push_back(std::move(sym));
    }
    return slot;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

std::string render_atom(const Slot& s) {
  switch (s.kind) {
    case SlotKind::literal: return s.symbols.front();
    case SlotKind::set: return fmt::format("{{{}}}", fmt::join(s.symbols, ","));
    case SlotKind::any_consonant: return "C";
    case SlotKind::any_vowel: return "V";
    case SlotKind::vowel_with_stress: return fmt::format("V{}", s.stress);
    case SlotKind::wildcard: return "X";
  }
  return "?";
}

bool symbol_matches(const std::string& symbol, const std::string& label, const PhoneClass& cls) {
  if (std::isdigit(static_cast<unsigned char>(symbol.back()))) return symbol == label;
  return symbol == cls.base;
}

bool pattern_matches_at(const CompiledPattern& p, const std::vector<PhoneToken>& tokens,
                        const std::vector<const PhoneClass*>& classes, std::size_t pos) {
  if (pos + p.slots.size() > tokens.size()) return false;
  for (std::size_t k = 0; k < p.slots.size(); ++k) {
    if (!slot_matches(p.slots[k], tokens[pos + k].label, *classes[pos + k])) return false;
  }
  return true;
}

} // namespace

CompiledPattern compile(const std::string& pattern_text) {
  return PatternParser(pattern_text).parse();
}

std::string render(const CompiledPattern& pattern) {
  std::string out = pattern.anchored_at_word_start ? "#" : "";
  for (std::size_t i = 0; i < pattern.slots.size(); ++i) {
    if (!out.empty()) out += ' ';
    const auto atom = render_atom(pattern.slots[i]);
    out += i == pattern.target_index ? "(" + atom + ")" : atom;
  }
  return out;
}

bool slot_matches(const Slot& slot, const std::string& label, const PhoneClass& cls) {
  switch (slot.kind) {
    case SlotKind::wildcard: return true;
    case SlotKind::any_consonant: return cls.kind == PhoneKind::consonant;
    case SlotKind::any_vowel: return cls.kind == PhoneKind::vowel;
    case SlotKind::vowel_with_stress:
      return cls.kind == PhoneKind::vowel && static_cast<int>(cls.stress) == slot.stress;
    case SlotKind::literal: return symbol_matches(slot.symbols.front(), label, cls);
    case SlotKind::set:
      return std::any_of(slot.symbols.begin(), slot.symbols.end(),
                         [&](const std::string& s) { return symbol_matches(s, label, cls); });
  }
  return false;
}

std::string to_string(ContrastKind kind) {
  switch (kind) {
    case ContrastKind::phonemic: return "phonemic";
    case ContrastKind::phonetic: return "phonetic";
    case ContrastKind::positive_control: return "positive_control";
    case ContrastKind::negative_control: return "negative_control";
  }
  return "?";
}

std::optional<ContrastKind> parse_contrast_kind(const std::string& text) {
  for (auto k : {ContrastKind::phonemic, ContrastKind::phonetic, ContrastKind::positive_control,
                 ContrastKind::negative_control}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string to_string(GroupLabel label) {
  switch (label) {
    case GroupLabel::group1: return "1";
    case GroupLabel::group2: return "2";
    case GroupLabel::confound: return "confound";
  }
  return "?";
}

void ContrastSpec::validate() const {
  if (group1.empty() || group2.empty()) {
    throw Error(ErrorKind::contract, fmt::format("contrast '{}' needs patterns in both groups", name));
  }
  const bool needs_confound = kind == ContrastKind::phonemic || kind == ContrastKind::phonetic;
  if (needs_confound == confound.empty()) {
    throw Error(ErrorKind::contract,
                fmt::format("contrast '{}': a confound group is required for phonemic/phonetic "
                            "contrasts and forbidden for controls",
                            name));
  }
}

std::vector<TargetToken> match_utterance(const Utterance& utterance, const Inventory& inventory,
                                         const ContrastSpec& spec) {
  const auto& tokens = utterance.tokens;
  std::vector<const PhoneClass*> classes;
  classes.reserve(tokens.size());
  for (const auto& t : tokens) classes.push_back(&inventory.at(t.label));

  // token position -> group that claimed it
  std::map<std::size_t, GroupLabel> claimed;
  auto run_group = [&](const std::vector<CompiledPattern>& patterns, GroupLabel label) {
    for (const auto& p : patterns) {
      const std::size_t last = p.anchored_at_word_start ? 0 : tokens.size();
      for (std::size_t pos = 0; pos <= last && pos < tokens.size(); ++pos) {
        if (!pattern_matches_at(p, tokens, classes, pos)) continue;
        const std::size_t target = pos + p.target_index;
        const auto [it, inserted] = claimed.emplace(target, label);
        if (!inserted && it->second != label) {
          throw Error(ErrorKind::ambiguity,
                      fmt::format("contrast '{}': phone {} '{}' of utterance '{}' matches "
                                  "groups {} and {}",
                                  spec.name, target, tokens[target].label, utterance.id,
                                  to_string(it->second), to_string(label)));
        }
      }
    }
  };
  run_group(spec.group1, GroupLabel::group1);
  run_group(spec.group2, GroupLabel::group2);
  run_group(spec.confound, GroupLabel::confound);

  std::vector<TargetToken> out;
  out.reserve(claimed.size());
  for (const auto& [pos, label] : claimed) {
    out.push_back(TargetToken{tokens[pos], label, spec.name});
  }
  return out;
}

std::vector<TargetToken> match(const Corpus& corpus, const Inventory& inventory,
                               const ContrastSpec& spec) {
  spec.validate();
  std::vector<const Utterance*> order;
  order.reserve(corpus.utterances().size());
  for (const auto& u : corpus.utterances()) order.push_back(&u);
  std::sort(order.begin(), order.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });

  std::vector<TargetToken> out;
  for (const auto* u : order) {
    auto part = match_utterance(*u, inventory, spec);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

} // namespace phonoprobe
