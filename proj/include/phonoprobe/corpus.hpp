#ifndef PHONOPROBE_CORPUS_HPP
#define PHONOPROBE_CORPUS_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phonoprobe {

/// One annotated phone interval within an isolated-word recording.
struct PhoneToken {
  std::string utterance_id;
  std::string word_form;
  bool is_pseudoword = false;
  int index_in_word = 0;
  std::string label; // ARPAbet, vowels may carry a stress digit
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const PhoneToken&) const = default;
};

struct Utterance {
  std::string id;
  std::string word_form;
  bool is_pseudoword = false;
  std::vector<PhoneToken> tokens; // sorted by start_s, index_in_word = 0..n-1

  bool operator==(const Utterance&) const = default;
};

/// Validated, immutable collection of utterances.
class Corpus {
public:
  Corpus() = default;
  explicit Corpus(std::vector<Utterance> utterances);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  const Utterance* find(const std::string& utterance_id) const;

  std::size_t word_count() const { return words_; }
  std::size_t pseudoword_count() const { return pseudowords_; }
  std::size_t token_count() const;
  bool empty() const { return utterances_.empty(); }

  /// Copy restricted to real words (drops pseudoword utterances).
  Corpus words_only() const;

  bool operator==(const Corpus& other) const { return utterances_ == other.utterances_; }

private:
  std::vector<Utterance> utterances_;
  std::map<std::string, std::size_t> index_;
  std::size_t words_ = 0;
  std::size_t pseudowords_ = 0;
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t dropped_silence = 0;
};

/// Column order of the alignment TSV.
inline constexpr const char* kAlignmentHeader =
    "utterance_id\tword_form\tis_pseudoword\tindex_in_word\tlabel\tstart_s\tend_s";

bool is_silence_label(const std::string& label);

Corpus load_alignments(const std::filesystem::path& path, LoadStats* stats = nullptr);
Corpus parse_alignments(std::istream& in, const std::string& source_name,
                        LoadStats* stats = nullptr);

void write_alignments(const Corpus& corpus, std::ostream& out);
void write_alignments(const Corpus& corpus, const std::filesystem::path& path);

enum class PhoneKind { consonant, vowel };

/// Stress digit of a vowel; consonants and digitless vowels carry none.
enum class Stress { none = -1, unstressed = 0, primary = 1, secondary = 2 };

struct PhoneClass {
  std::string base;
  PhoneKind kind = PhoneKind::consonant;
  Stress stress = Stress::none;

  bool operator==(const PhoneClass&) const = default;
};

bool is_vowel_base(const std::string& base);

/// Classifies one ARPAbet label; throws ErrorKind::classification on a
/// digit attached to a non-vowel base.
PhoneClass classify_label(const std::string& label);

class Inventory {
public:
  const PhoneClass& at(const std::string& label) const;
  const PhoneClass* find(const std::string& label) const;
  bool contains(const std::string& label) const { return find(label) != nullptr; }
  std::size_t size() const { return classes_.size(); }
  const std::map<std::string, PhoneClass>& entries() const { return classes_; }

  void add(const std::string& label);

private:
  std::map<std::string, PhoneClass> classes_;
};

Inventory build_inventory(const Corpus& corpus);

} // namespace phonoprobe

#endif
