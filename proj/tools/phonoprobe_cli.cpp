// phonoprobe command line: match, pool, run, select-dim, report, synth.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "phonoprobe/config.hpp"
#include "phonoprobe/error.hpp"
#include "phonoprobe/report.hpp"
#include "phonoprobe/runner.hpp"
#include "phonoprobe/synth.hpp"

namespace fs = std::filesystem;
using namespace phonoprobe;

namespace {

struct Options {
  fs::path config;
  fs::path out;
  fs::path results;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

// Exit status per error category; 1 is reserved for anything unexpected.
int exit_code(ErrorKind kind) { return 2 + static_cast<int>(kind); }

ExperimentConfig load(const Options& o) {
  auto c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.out.empty()) c.output = o.out;
  return c;
}

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::io, fmt::format("failed writing '{}'", path.string()));
}

void cmd_match(const Options& o) {
  const auto config = load(o);
  const auto matched = match_contrasts(config);
  std::ofstream file;
  fs::path path;
  if (!o.out.empty()) {
    path = o.out / "targets.csv";
    file = open_out(path);
  }
  std::ostream& out = o.out.empty() ? std::cout : file;
  out << "contrast,place,kind,label,utterance_id,word_form,index_in_word,phone,start_s,end_s\n";
  for (const auto& m : matched) {
    for (const auto& t : m.targets) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", m.spec.name, m.spec.place,
                         to_string(m.spec.kind), to_string(t.label), t.token.utterance_id,
                         t.token.word_form, t.token.index_in_word, t.token.label,
                         t.token.start_s, t.token.end_s);
    }
  }
  if (!o.out.empty()) {
    close_out(file, path);
    std::cout << path.string() << '\n';
  }
}

void cmd_pool(const Options& o) {
  const auto config = load(o);
  for (const auto& layer : pool_stimuli(config)) {
    const auto path = config.output / fmt::format("pooled_{}_{}.csv", layer.model_id, layer.layer_id);
    auto out = open_out(path);
    out << "utterance_id,index_in_word,label,start_s,end_s,skip_reason";
    for (Eigen::Index j = 0; j < layer.values.cols(); ++j) out << ",v" << j;
    out << '\n';
    for (std::size_t i = 0; i < layer.tokens.size(); ++i) {
      const auto& t = layer.tokens[i];
      out << fmt::format("{},{},{},{},{},{}", t.utterance_id, t.index_in_word, t.label, t.start_s,
                         t.end_s, layer.skipped[i]);
      for (Eigen::Index j = 0; j < layer.values.cols(); ++j) {
        if (layer.skipped[i].empty()) {
          out << fmt::format(",{}", layer.values(static_cast<Eigen::Index>(i), j));
        } else {
          out << ',';
        }
      }
      out << '\n';
    }
    close_out(out, path);
    std::cout << path.string() << '\n';
  }
}

void cmd_run(const Options& o) {
  const auto config = load(o);
  const auto result = run_experiment(config);
  for (const auto& p : write_experiment_outputs(result, config.output)) {
    std::cout << p.string() << '\n';
  }
  const auto path = config.output / "config.ini";
  auto out = open_out(path);
  write_config(config, out);
  close_out(out, path);
}

void cmd_select_dim(const Options& o) {
  const auto config = load(o);
  const auto selections = select_dimensions(config);
  const auto path = config.output / "selection.csv";
  auto out = open_out(path);
  write_selection_csv(selections, out);
  close_out(out, path);
  for (const auto& s : selections) {
    std::cout << fmt::format("{}: d* = {}\n", s.model_id, s.result.d_star);
  }
}

void cmd_report(const Options& o) {
  const auto table = read_results_csv(o.results);
  const auto dir = o.out.empty() ? o.results.parent_path() : o.out;
  for (const auto& p : emit_report(table, dir)) std::cout << p.string() << '\n';
}

void cmd_synth(const Options& o) {
  const auto spec = o.config.empty() ? SynthSpec{} : load_synth_spec(o.config);
  const auto data = generate_synthetic(spec, o.seed.value_or(0));
  const auto dir = o.out.empty() ? fs::path("synthetic") : o.out;
  std::cout << write_synthetic(spec, data, dir).string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise phonetic/phonemic probing of speech representations"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "experiment config (INI)");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* match = app.add_subcommand("match", "list the matched target tokens of every contrast");
  add_common(match, true);
  auto* pool = app.add_subcommand("pool", "write pooled phone vectors per model layer");
  add_common(pool, true);
  auto* run = app.add_subcommand("run", "run the full probing experiment");
  add_common(run, true);
  auto* select = app.add_subcommand("select-dim", "search the PCA dimension with control contrasts");
  add_common(select, true);
  auto* report = app.add_subcommand("report", "render charts from a results CSV");
  report->add_option("--results", o.results, "results.csv")->required();
  report->add_option("--out", o.out, "output directory (default: next to the CSV)");
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus, stores and config");
  add_common(synth, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (match->parsed()) cmd_match(o);
    else if (pool->parsed()) cmd_pool(o);
    else if (run->parsed()) cmd_run(o);
    else if (select->parsed()) cmd_select_dim(o);
    else if (report->parsed()) cmd_report(o);
    else if (synth->parsed()) cmd_synth(o);
  } catch (const Error& e) {
    std::cerr << "phonoprobe: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "phonoprobe: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
