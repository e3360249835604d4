#include <cmath>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "phonoprobe/config.hpp"
#include "phonoprobe/error.hpp"
#include "phonoprobe/report.hpp"
#include "phonoprobe/runner.hpp"
#include "phonoprobe/synth.hpp"

using namespace phonoprobe;
namespace fs = std::filesystem;

namespace {

// Writes a synthetic dataset and returns a config over it with the given
// extra sections. CV is kept small so each run takes well under a second.
ExperimentConfig synthetic_config(const std::string& tag, const SynthSpec& spec, std::uint64_t seed,
                                  const std::string& contrasts = "builtin = stops\nplaces = labial\n",
                                  const std::string& extra = "") {
  const auto dir = fixtures::scratch_dir(tag);
  write_synthetic(spec, generate_synthetic(spec, seed), dir);
  std::string text = fmt::format(
      "[experiment]\nseed = 5\noutput = out\n[corpus]\nalignments = alignments.tsv\n"
      "[contrasts]\n{}[cv]\nouter_folds = 3\ninner_folds = 2\nlambdas = 0.01, 1\n{}[model.{}]\n",
      contrasts, extra, spec.model_id);
  for (const auto& l : spec.layers) {
    text += fmt::format("{} = {}_{}.prst\n", l.layer_id, spec.model_id, l.layer_id);
  }
  std::istringstream in(text);
  return parse_config(in, "test.ini", dir);
}

ExperimentConfig parse_text(const std::string& text, const fs::path& dir) {
  std::istringstream in(text);
  return parse_config(in, "test.ini", dir);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::contract;
}

std::string csv_of(const ResultsTable& t) {
  std::ostringstream s;
  write_results_csv(t, s);
  return s.str();
}

ResultRow row(std::int32_t layer, const std::string& contrast, const std::string& place,
              double auc) {
  ResultRow r;
  r.model_id = "m";
  r.layer_id = layer;
  r.contrast = contrast;
  r.place = place;
  r.d = 8;
  r.n_samples = 30;
  r.n_group1 = r.n_group2 = r.n_confound = 10;
  r.auc_weighted = r.auc_12 = r.auc_1c = r.auc_2c = auc;
  r.lambdas = {0.1, 1.0};
  return r;
}

std::vector<int> tick_labels(const std::string& svg) {
  static const std::regex tick(R"(<g class="xtick">.*?>(-?\d+)</text></g>)");
  std::vector<int> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tick); it != std::sregex_iterator(); ++it) {
    out.push_back(std::stoi((*it)[1].str()));
  }
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

SynthSpec small_spec() {
  SynthSpec s;
  s.words_per_type = 12;
  s.places = {"labial"};
  s.dim = 16;
  s.layers = {{1, 0.0}, {2, 10.0}};
  return s;
}

} // namespace

TEST_CASE("config: canonical rendering parses back to the same config") {
  const auto c = synthetic_config("cfg_round", small_spec(), 1, "builtin = stops, controls\n",
                                  "[pca]\nmode = fixed\ndim = 4\npopulation = fold\n");
  CHECK(c.models.size() == 1);
  CHECK(c.models[0].layers.size() == 2);
  CHECK(c.cv.lambdas == std::vector<double>{0.01, 1});
  CHECK(c.pca.mode == PcaMode::fixed);
  CHECK(c.pca.dim == 4);
  CHECK(c.contrasts().size() == 10); // 3 places x 2 stop contrasts + 4 controls
  std::ostringstream out;
  write_config(c, out);
  std::istringstream in(out.str());
  CHECK(parse_config(in, "again.ini", "/") == c);
}

TEST_CASE("config: errors carry a kind and a location") {
  const auto base = synthetic_config("cfg_err", small_spec(), 1);
  const auto dir = base.alignments.parent_path();
  const std::string head = "[corpus]\nalignments = alignments.tsv\n";
  const std::string model = "[model.synthetic]\n1 = synthetic_1.prst\n";

  CHECK(kind_of([&] { parse_text(head + model + "[bogus]\nx = 1\n", dir); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { parse_text(head + model + "[cv]\nouter_fold = 3\n", dir); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { parse_text(head + "[model.synthetic]\n1 = missing.prst\n", dir); }) ==
        ErrorKind::io);
  CHECK(kind_of([&] { parse_text(head + "[model.synthetic]\none = synthetic_1.prst\n", dir); }) ==
        ErrorKind::parse);
  CHECK(kind_of([&] { parse_text(head, dir); }) == ErrorKind::validation);
  CHECK(kind_of([&] { parse_text(model, dir); }) == ErrorKind::validation);
  CHECK(kind_of([&] { parse_text(head + model + "[contrasts]\nplaces = dental\n", dir); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { parse_text(head + model + "[pca]\nmode = fixed\n", dir); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { parse_text(head + model + "[contrast.x]\nkind = phonemic\nplace = labial\n"
                                 "group1 = # (P V\ngroup2 = # (B) V\nconfound = # S (K) V\n",
                                 dir); }) == ErrorKind::parse);
  try {
    parse_text(head + model + "[cv]\nouter_folds = 1\n", dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("[cv]") != std::string::npos);
  }
}

TEST_CASE("config: custom DSL contrasts join the built-ins") {
  const auto c = synthetic_config(
      "cfg_custom", small_spec(), 1, "builtin = none\n",
      "[contrast.onset_b]\nkind = positive_control\ngroup1 = # (B) V\ngroup2 = # (P) V\n");
  const auto specs = c.contrasts();
  REQUIRE(specs.size() == 1);
  CHECK(specs[0].name == "onset_b");
  CHECK(specs[0].class_count() == 2);
}

TEST_CASE("synth: deterministic per seed") {
  SynthSpec s = small_spec();
  const auto a = generate_synthetic(s, 11);
  const auto b = generate_synthetic(s, 11);
  const auto c = generate_synthetic(s, 12);
  REQUIRE(a.stores.size() == 2);
  CHECK(encode_store(a.stores[1]) == encode_store(b.stores[1]));
  CHECK(encode_store(a.stores[1]) != encode_store(c.stores[1]));
  std::ostringstream ta, tb;
  write_alignments(a.corpus, ta);
  write_alignments(b.corpus, tb);
  CHECK(ta.str() == tb.str());
  CHECK(a.corpus.utterances().size() == 4 * s.words_per_type);
  CHECK(a.stores[0].header().dim == s.dim);
}

TEST_CASE("synth: contradictory specs are contract errors") {
  auto k_too_big = small_spec();
  k_too_big.planted_k = 14; // 14 + 2 + 3 > 16
  CHECK(kind_of([&] { generate_synthetic(k_too_big, 0); }) == ErrorKind::contract);
  auto few = small_spec();
  few.words_per_type = 2;
  CHECK(kind_of([&] { generate_synthetic(few, 0); }) == ErrorKind::contract);
  auto tiny = small_spec();
  tiny.dim = 1;
  CHECK(kind_of([&] { generate_synthetic(tiny, 0); }) == ErrorKind::contract);
  auto twice = small_spec();
  twice.layers = {{1, 0.0}, {1, 1.0}};
  CHECK(kind_of([&] { generate_synthetic(twice, 0); }) == ErrorKind::contract);

  std::istringstream bad("[synth]\nlayers = 1:x\n");
  CHECK(kind_of([&] { parse_synth_spec(bad, "s.ini"); }) == ErrorKind::parse);
  std::istringstream good("[synth]\ndim = 20\nlayers = -1:0, 3:2.5\n");
  const auto parsed = parse_synth_spec(good, "s.ini");
  CHECK(parsed.dim == 20);
  CHECK(parsed.layers == std::vector<SynthLayer>{{-1, 0.0}, {3, 2.5}});
}

TEST_CASE("run: 2 layers x 2 contrasts x 1 place, signal planted in layer 2 only") {
  const auto config = synthetic_config("run_rows", small_spec(), 21);
  const auto result = run_experiment(config);
  std::size_t non_mean = 0;
  for (const auto& r : result.table.rows) non_mean += r.place != kMeanPlace;
  CHECK(non_mean == 4);
  CHECK(result.table.rows.size() == 8); // one mean row per (layer, contrast)

  for (const char* contrast : {"phonemic", "phonetic"}) {
    const auto* l1 = result.table.find("synthetic", 1, contrast, "labial");
    const auto* l2 = result.table.find("synthetic", 2, contrast, "labial");
    REQUIRE(l1);
    REQUIRE(l2);
    INFO(contrast, " layer1 ", l1->auc_weighted, " layer2 ", l2->auc_weighted);
    CHECK(l2->auc_weighted - l1->auc_weighted >= 0.3);
    CHECK(l1->lambdas.size() == 3);
    CHECK(l1->n_group1 + l1->n_group2 + l1->n_confound == l1->n_samples);
    CHECK(l1->d == 16);
  }

  bool partition_logged = false;
  for (const auto& line : result.log) {
    if (line.rfind("partition labial", 0) == 0) {
      partition_logged = true;
      CHECK(line.find("identical=yes") != std::string::npos);
    }
  }
  CHECK(partition_logged);
}

TEST_CASE("run: mean rows are recomputable from place rows") {
  auto spec = small_spec();
  spec.places = {"labial", "alveolar", "velar"};
  spec.words_per_type = 6;
  spec.layers = {{1, 4.0}};
  const auto config = synthetic_config("run_mean", spec, 3,
                                       "builtin = stops\nplaces = labial, alveolar, velar\n");
  const auto table = run_experiment(config).table;
  std::size_t means = 0;
  for (const auto& m : table.rows) {
    if (m.place != kMeanPlace) continue;
    ++means;
    double w = 0, p12 = 0, p1c = 0, p2c = 0;
    std::size_t n = 0;
    for (const char* place : {"labial", "alveolar", "velar"}) {
      const auto* r = table.find(m.model_id, m.layer_id, m.contrast, place);
      REQUIRE(r);
      w += r->auc_weighted;
      p12 += r->auc_12;
      p1c += r->auc_1c;
      p2c += r->auc_2c;
      n += r->n_samples;
    }
    CHECK(m.auc_weighted == w / 3);
    CHECK(m.auc_12 == p12 / 3);
    CHECK(m.auc_1c == p1c / 3);
    CHECK(m.auc_2c == p2c / 3);
    CHECK(m.n_samples == n);
    CHECK(m.lambdas.empty());
  }
  CHECK(means == 2);
}

TEST_CASE("run: identical config gives byte-identical CSV, at any job count") {
  auto config = synthetic_config("run_det", small_spec(), 8, "builtin = stops, controls\nplaces = labial\n",
                                 "[pca]\nmode = fixed\ndim = 6\n");
  const auto a = csv_of(run_experiment(config).table);
  const auto b = csv_of(run_experiment(config).table);
  config.jobs = 3;
  const auto c = csv_of(run_experiment(config).table);
  CHECK(a == b);
  CHECK(a == c);
  config.seed += 1;
  CHECK(csv_of(run_experiment(config).table) != a);
}

TEST_CASE("run: layer id mismatch between config and store") {
  auto config = synthetic_config("run_mismatch", small_spec(), 2);
  config.models[0].layers[0].layer_id = 7;
  try {
    run_experiment(config);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("run: module errors carry model, layer and contrast provenance") {
  auto spec = small_spec();
  spec.words_per_type = 3; // 3 S+P targets cannot fill 10 outer folds
  auto config = synthetic_config("run_prov", spec, 2);
  config.cv.outer_folds = 10;
  try {
    run_experiment(config);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(e.kind() == ErrorKind::insufficient);
    CHECK(what.find("model synthetic layer 1 contrast phonemic place labial") != std::string::npos);
  }
}

TEST_CASE("results CSV: schema and round trip") {
  const std::string header =
      "model_id,layer_id,contrast,place,kind,d,n_samples,n_group1,n_group2,n_confound,"
      "auc_weighted,auc_12,auc_1c,auc_2c,lambdas";
  std::string joined;
  for (const auto& c : results_columns()) joined += (joined.empty() ? "" : ",") + c;
  CHECK(joined == header);

  ResultsTable t;
  t.rows.push_back(row(-3, "phonemic", "labial", 0.1 + 0.2));
  t.rows.push_back(row(-3, "phonemic", "velar", 2.0 / 3.0));
  auto two = row(4, "stress", "", 0.987654321012345);
  two.kind = ContrastKind::positive_control;
  two.auc_1c = two.auc_2c = std::nan("");
  two.n_confound = 0;
  t.rows.push_back(two);
  add_mean_rows(t);
  const auto text = csv_of(t);
  CHECK(text.rfind(header + "\n", 0) == 0);
  std::istringstream in(text);
  const auto back = read_results_csv(in, "r.csv");
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(back.rows[i] == t.rows[i]);
  CHECK(text.find("stress,,positive_control,8,30,10,10,0,0.987654321012345,0.987654321012345,,,") !=
        std::string::npos);

  std::istringstream bad_header("model_id,layer\n");
  CHECK(kind_of([&] { read_results_csv(bad_header, "r.csv"); }) == ErrorKind::parse);
  std::istringstream short_row(header + "\nm,1,x\n");
  CHECK(kind_of([&] { read_results_csv(short_row, "r.csv"); }) == ErrorKind::parse);
}

TEST_CASE("chart: 19 layers give 19 ticks spanning -7..-1 and 1..12") {
  ResultsTable t;
  for (int l = -7; l <= 12; ++l) {
    if (l == 0) continue;
    for (const char* place : {"labial", "alveolar", "velar"}) {
      t.rows.push_back(row(l, "phonetic", place, 0.5 + 0.02 * (l + 7)));
    }
  }
  for (const char* place : {"labial", "alveolar", "velar"}) {
    ResultRow base = row(0, "phonetic", place, 0.8);
    base.model_id = "logmel";
    t.rows.push_back(base);
  }
  add_mean_rows(t);
  const auto svg = render_chart(t, "phonetic");
  std::vector<int> expected;
  for (int l = -7; l <= 12; ++l) {
    if (l) expected.push_back(l);
  }
  CHECK(tick_labels(svg) == expected);
  CHECK(count(svg, "class=\"marker\"") == 19);
  CHECK(count(svg, "class=\"series\"") == 1);
  CHECK(count(svg, "class=\"baseline\"") == 1);
  CHECK(svg.find("class=\"baseline\" x1=\"60\" y1=\"106.00\"") != std::string::npos); // 40 + 0.2 * 330
}

TEST_CASE("chart: a single-layer table renders one marker") {
  ResultsTable t;
  t.rows.push_back(row(5, "stress", "", 0.9));
  const auto svg = render_chart(t, "stress");
  CHECK(tick_labels(svg) == std::vector<int>{5});
  CHECK(count(svg, "class=\"marker\"") == 1);
  CHECK(svg.find("nan") == std::string::npos);
}

TEST_CASE("report: files, empty table and unwritable directory") {
  ResultsTable t;
  t.rows.push_back(row(1, "phonemic", "labial", 0.7));
  t.rows.push_back(row(2, "phonemic", "labial", 0.9));
  const auto dir = fixtures::scratch_dir("report_ok");
  const auto files = emit_report(t, dir);
  CHECK(files.size() == 2);
  CHECK(fs::exists(dir / "results.csv"));
  CHECK(fs::exists(dir / "figures" / "phonemic.svg"));
  CHECK(read_results_csv(dir / "results.csv").rows == t.rows);

  CHECK(kind_of([&] { emit_report(ResultsTable{}, dir); }) == ErrorKind::contract);

  // A regular file where a directory is needed cannot be written into, even as root.
  const auto blocker = fixtures::scratch_dir("report_blocked") / "file";
  std::ofstream(blocker) << "x";
  CHECK(kind_of([&] { emit_report(t, blocker / "out"); }) == ErrorKind::io);
}
