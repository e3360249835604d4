#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "phonoprobe/corpus.hpp"
#include "phonoprobe/error.hpp"

using namespace phonoprobe;

namespace {

Corpus parse(const std::string& body, LoadStats* stats = nullptr) {
  std::istringstream in(std::string(kAlignmentHeader) + "\n" + body);
  return parse_alignments(in, "test.tsv", stats);
}

ErrorKind kind_of(const std::string& body) {
  try {
    parse(body);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

} // namespace

TEST_CASE("speak ingests as one utterance of four phones") {
  const auto c = parse(
      "speak\tspeak\t0\t0\tS\t0.00\t0.08\n"
      "speak\tspeak\t0\t1\tP\t0.08\t0.15\n"
      "speak\tspeak\t0\t2\tIY1\t0.15\t0.30\n"
      "speak\tspeak\t0\t3\tK\t0.30\t0.38\n");
  CHECK(c.utterances().size() == 1);
  CHECK(c.token_count() == 4);
  CHECK(c.word_count() == 1);
  CHECK(c.pseudoword_count() == 0);
  CHECK(c.utterances()[0].tokens[2].label == "IY1");
}

TEST_CASE("rows are ordered by start time within an utterance") {
  const auto c = parse(
      "u\tup\t0\t1\tP\t0.10\t0.20\n"
      "u\tup\t0\t0\tAH1\t0.00\t0.10\n");
  const auto& t = c.utterances()[0].tokens;
  CHECK(t[0].label == "AH1");
  CHECK(t[0].index_in_word == 0);
  CHECK(t[1].label == "P");
}

TEST_CASE("invalid intervals and malformed rows") {
  CHECK(kind_of("u\tup\t0\t0\tP\t0.20\t0.20\n") == ErrorKind::validation);
  CHECK(kind_of("u\tup\t0\t0\tP\t0.30\t0.20\n") == ErrorKind::validation);
  CHECK(kind_of("u\tup\t0\t0\tAH1\t0.0\t0.2\nu\tup\t0\t1\tP\t0.1\t0.3\n") ==
        ErrorKind::validation);
  CHECK(kind_of("u\tup\t0\t0\tP\t0.1\n") == ErrorKind::parse);
  CHECK(kind_of("u\tup\t0\t0\tP\tzero\t0.2\n") == ErrorKind::parse);
  CHECK(kind_of("u\tup\t2\t0\tP\t0.0\t0.2\n") == ErrorKind::parse);
  CHECK(kind_of("u\tup\t0\t0\tAH1\t0.0\t0.1\nu\tuh\t0\t1\tP\t0.1\t0.2\n") ==
        ErrorKind::validation);
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse("u\tup\t0\t0\tAH1\t0.0\t0.1\nu\tup\t0\t1\tP\tx\t0.2\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("test.tsv:3") != std::string::npos);
  }
}

TEST_CASE("validation errors name the utterance") {
  try {
    parse("bad_utt\tup\t0\t0\tP\t0.3\t0.2\n");
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad_utt") != std::string::npos);
  }
}

TEST_CASE("silence markers are dropped and counted") {
  LoadStats stats;
  const auto c = parse(
      "u\tup\t0\t0\tsil\t0.00\t0.05\n"
      "u\tup\t0\t1\tAH1\t0.05\t0.15\n"
      "u\tup\t0\t2\tsp\t0.15\t0.16\n"
      "u\tup\t0\t3\tP\t0.16\t0.25\n",
      &stats);
  CHECK(stats.rows == 4);
  CHECK(stats.dropped_silence == 2);
  REQUIRE(c.token_count() == 2);
  CHECK(c.utterances()[0].tokens[1].index_in_word == 1);
}

TEST_CASE("fixture corpus token count matches the row count of the file") {
  LoadStats stats;
  const auto c = load_alignments(fixtures::path("fixture_corpus.tsv"), &stats);
  // 77 data rows, three of them leading silences.
  CHECK(stats.rows == 77);
  CHECK(stats.dropped_silence == 3);
  CHECK(c.token_count() == 74);
  CHECK(c.utterances().size() == 20);
  CHECK(c.word_count() == 19);
  CHECK(c.pseudoword_count() == 1);
  CHECK(c.words_only().utterances().size() == 19);
}

TEST_CASE("TSV round trip reproduces the corpus") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto c = fixtures::random_corpus(seed, 40);
    std::stringstream buf;
    write_alignments(c, buf);
    const auto back = parse_alignments(buf, "roundtrip");
    CHECK(back == c);
  }
}

TEST_CASE("loaded corpora satisfy the tiling invariant") {
  const auto c = fixtures::random_corpus(11, 50);
  for (const auto& u : c.utterances()) {
    for (std::size_t i = 1; i < u.tokens.size(); ++i) {
      CHECK(u.tokens[i].start_s >= u.tokens[i - 1].end_s);
    }
  }
}

TEST_CASE("duplicate utterance ids are rejected") {
  Utterance u{"a", "w", false, {{"a", "w", false, 0, "P", 0.0, 0.1}}};
  CHECK_THROWS_AS(Corpus({u, u}), Error);
}

TEST_CASE("inventory classification") {
  CHECK(classify_label("IY1") == PhoneClass{"IY", PhoneKind::vowel, Stress::primary});
  CHECK(classify_label("AH0") == PhoneClass{"AH", PhoneKind::vowel, Stress::unstressed});
  CHECK(classify_label("OW2").stress == Stress::secondary);
  CHECK(classify_label("P") == PhoneClass{"P", PhoneKind::consonant, Stress::none});
  CHECK(classify_label("AE").kind == PhoneKind::vowel);
  CHECK(classify_label("AE").stress == Stress::none);
  CHECK_THROWS_AS(classify_label("ZZ9"), Error);
  CHECK_THROWS_AS(classify_label("P1"), Error);
  CHECK_THROWS_AS(classify_label("IY3"), Error);
}

TEST_CASE("inventory covers every corpus label") {
  const auto c = load_alignments(fixtures::path("fixture_corpus.tsv"));
  const auto inv = build_inventory(c);
  for (const auto& u : c.utterances()) {
    for (const auto& t : u.tokens) CHECK(inv.contains(t.label));
  }
  for (const auto& [label, cls] : inv.entries()) {
    if (std::isdigit(static_cast<unsigned char>(label.back()))) CHECK(cls.kind == PhoneKind::vowel);
  }
}

TEST_CASE("inventory rejects unknown digit-bearing labels") {
  const auto c = parse("u\tz\t0\t0\tZZ9\t0.0\t0.1\n");
  try {
    build_inventory(c);
    FAIL("expected classification error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::classification);
  }
  CHECK_THROWS_AS(build_inventory(Corpus{}), Error);
}
