#ifndef PHONOPROBE_PHONEPATTERNS_HPP
#define PHONOPROBE_PHONEPATTERNS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "phonoprobe/corpus.hpp"

namespace phonoprobe {

// Stimulus pattern DSL
//
//   pattern  := [ "#" ] slot { slot }          (slots separated by whitespace)
//   slot     := atom | "(" atom ")"            (exactly one parenthesised target)
//   atom     := "C" | "V" | "V0" | "V1" | "X" | SYMBOL | "{" SYMBOL { "," SYMBOL } "}"
//   SYMBOL   := ARPAbet label, upper case, optional trailing stress digit
//
// "#" anchors the first slot at the word onset. Symbols inside braces are
// always literal, so "{V}" is the consonant V rather than any vowel.

enum class SlotKind { literal, set, any_consonant, any_vowel, vowel_with_stress, wildcard };

struct Slot {
  SlotKind kind = SlotKind::wildcard;
  std::vector<std::string> symbols; // literal: one symbol; set: nonempty
  int stress = -1;                  // vowel_with_stress only

  bool operator==(const Slot&) const = default;
};

struct CompiledPattern {
  std::vector<Slot> slots;
  bool anchored_at_word_start = false;
  std::size_t target_index = 0;

  bool operator==(const CompiledPattern&) const = default;
};

CompiledPattern compile(const std::string& pattern_text);
std::string render(const CompiledPattern& pattern);

/// True if the slot accepts a phone with this label.
bool slot_matches(const Slot& slot, const std::string& label, const PhoneClass& cls);

enum class ContrastKind { phonemic, phonetic, positive_control, negative_control };

std::string to_string(ContrastKind kind);
std::optional<ContrastKind> parse_contrast_kind(const std::string& text);

/// Class index a target token receives within one contrast.
enum class GroupLabel { group1 = 0, group2 = 1, confound = 2 };

std::string to_string(GroupLabel label);

struct ContrastSpec {
  std::string name;
  std::string place; // empty for place-independent contrasts
  ContrastKind kind = ContrastKind::phonemic;
  std::vector<CompiledPattern> group1;
  std::vector<CompiledPattern> group2;
  std::vector<CompiledPattern> confound; // nonempty iff phonemic/phonetic

  std::size_t class_count() const { return confound.empty() ? 2 : 3; }

  /// Throws ErrorKind::contract when the group/confound invariants fail.
  void validate() const;
};

struct TargetToken {
  PhoneToken token;
  GroupLabel label = GroupLabel::group1;
  std::string contrast_name;

  bool operator==(const TargetToken&) const = default;
};

/// Every target matched by the contrast's patterns, ordered by
/// (utterance_id, start_s). A token claimed by two different groups raises
/// ErrorKind::ambiguity.
std::vector<TargetToken> match(const Corpus& corpus, const Inventory& inventory,
                               const ContrastSpec& spec);

/// Same as match() restricted to one utterance; used for sharded matching.
std::vector<TargetToken> match_utterance(const Utterance& utterance, const Inventory& inventory,
                                         const ContrastSpec& spec);

} // namespace phonoprobe

#endif
