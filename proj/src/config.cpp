#include "phonoprobe/config.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "ini.hpp"
#include "phonoprobe/error.hpp"
#include "phonoprobe/xval.hpp"
#include "text.hpp"

namespace phonoprobe {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

void require_file(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw Error(ErrorKind::io, fmt::format("{} '{}' does not exist", what, p.string()));
  }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void read_experiment(ini::Section s, ExperimentConfig& c, const fs::path& base) {
  c.seed = s.get_int<std::uint64_t>("seed", c.seed);
  if (s.has("output")) c.output = resolve(base, s.raw("output"));
  c.jobs = s.get_int<std::size_t>("jobs", c.jobs);
  if (c.jobs == 0) throw s.error(ErrorKind::validation, "jobs must be at least 1");
  s.finish();
}

void read_corpus(ini::Section s, ExperimentConfig& c, const fs::path& base) {
  if (!s.present()) throw s.error(ErrorKind::validation, "section is required");
  c.alignments = resolve(base, s.require_string("alignments"));
  c.include_pseudowords = s.get_bool("include_pseudowords", c.include_pseudowords);
  s.finish();
}

void read_contrasts(ini::Section s, ExperimentConfig& c) {
  const auto builtin = s.get_list("builtin", ',', {"stops", "controls"});
  c.builtin_stops = false;
  c.builtin_controls = false;
  for (const auto& b : builtin) {
    if (b == "stops") {
      c.builtin_stops = true;
    } else if (b == "controls") {
      c.builtin_controls = true;
    } else if (b != "none") {
      throw s.error(ErrorKind::validation,
                    fmt::format("builtin '{}' is not one of stops, controls, none", b));
    }
  }
  c.places = s.get_list("places", ',', c.places);
  std::set<std::string> seen;
  for (const auto& p : c.places) {
    const bool known = std::any_of(builtin_places().begin(), builtin_places().end(),
                                   [&](const Place& bp) { return bp.name == p; });
    if (!known) throw s.error(ErrorKind::validation, fmt::format("unknown place '{}'", p));
    if (!seen.insert(p).second) {
      throw s.error(ErrorKind::validation, fmt::format("place '{}' listed twice", p));
    }
  }
  const auto policy = s.get_string("confound_policy", "drop_own_stop");
  if (policy == "drop_own_stop") {
    c.confound_policy = ConfoundPolicy::drop_own_stop;
  } else if (policy == "verbatim") {
    c.confound_policy = ConfoundPolicy::verbatim;
  } else {
    throw s.error(ErrorKind::validation,
                  fmt::format("confound_policy '{}' is not drop_own_stop or verbatim", policy));
  }
  s.finish();
}

CustomContrast read_custom(ini::Section s, const std::string& name) {
  CustomContrast cc;
  cc.name = name;
  if (name.empty() || name.find_first_of(",/\\ \t") != std::string::npos) {
    throw s.error(ErrorKind::validation, "contrast names may not be empty or contain , / \\ or spaces");
  }
  const auto kind = s.require_string("kind");
  const auto parsed = parse_contrast_kind(kind);
  if (!parsed) throw s.error(ErrorKind::validation, fmt::format("unknown kind '{}'", kind));
  cc.kind = *parsed;
  cc.place = s.get_string("place", "");
  cc.group1 = s.get_list("group1", ';', {});
  cc.group2 = s.get_list("group2", ';', {});
  cc.confound = s.get_list("confound", ';', {});
  s.finish();
  try {
    make_contrast(cc.name, cc.place, cc.kind, cc.group1, cc.group2, cc.confound);
  } catch (const Error& e) {
    rethrow_with_context(e, fmt::format("[contrast.{}]", name));
  }
  return cc;
}

void read_cv(ini::Section s, ExperimentConfig& c) {
  auto& cv = c.cv;
  cv.outer_folds = s.get_int<std::size_t>("outer_folds", cv.outer_folds);
  cv.inner_folds = s.get_int<std::size_t>("inner_folds", cv.inner_folds);
  if (cv.outer_folds < 2 || cv.inner_folds < 2) {
    throw s.error(ErrorKind::validation, "outer_folds and inner_folds must be at least 2");
  }
  if (s.has("lambdas")) {
    if (s.has("lambda_min") || s.has("lambda_max") || s.has("lambda_points")) {
      throw s.error(ErrorKind::validation,
                    "give either lambdas or lambda_min/lambda_max/lambda_points, not both");
    }
    cv.lambdas.clear();
    for (const auto& v : s.get_list("lambdas", ',', {})) {
      const auto d = text::parse_double(v);
      if (!d || !(*d >= 0.0)) {
        throw s.error(ErrorKind::validation, fmt::format("lambda '{}' is not a number >= 0", v));
      }
      cv.lambdas.push_back(*d);
    }
    if (cv.lambdas.empty()) throw s.error(ErrorKind::validation, "empty lambda grid");
  } else {
    const double lo = s.get_double("lambda_min", 1e-4);
    const double hi = s.get_double("lambda_max", 1e2);
    const auto points = s.get_int<std::size_t>("lambda_points", 7);
    try {
      cv.lambdas = log_uniform_grid(lo, hi, points);
    } catch (const Error& e) {
      throw s.error(ErrorKind::validation, e.what());
    }
  }
  cv.tol = s.get_double("tol", cv.tol);
  cv.max_iter = s.get_int<int>("max_iter", cv.max_iter);
  if (!(cv.tol > 0.0) || cv.max_iter < 1) {
    throw s.error(ErrorKind::validation, "tol must be > 0 and max_iter >= 1");
  }
  cv.permute_labels = s.get_bool("permute_labels", cv.permute_labels);
  s.finish();
}

void read_metric(ini::Section s, ExperimentConfig& c) {
  const auto v = s.get_string("variant", "one_vs_one");
  if (v == "one_vs_one") {
    c.variant = AucVariant::one_vs_one;
  } else if (v == "one_vs_rest") {
    c.variant = AucVariant::one_vs_rest;
  } else {
    throw s.error(ErrorKind::validation,
                  fmt::format("variant '{}' is not one_vs_one or one_vs_rest", v));
  }
  s.finish();
}

void read_pca(ini::Section s, ExperimentConfig& c) {
  auto& p = c.pca;
  const auto mode = s.get_string("mode", "off");
  if (mode == "off") {
    p.mode = PcaMode::off;
  } else if (mode == "fixed") {
    p.mode = PcaMode::fixed;
  } else if (mode == "select_dstar") {
    p.mode = PcaMode::select_dstar;
  } else {
    throw s.error(ErrorKind::validation,
                  fmt::format("mode '{}' is not off, fixed or select_dstar", mode));
  }
  p.dim = s.get_int<std::size_t>("dim", 0);
  if (p.mode == PcaMode::fixed && p.dim < 1) {
    throw s.error(ErrorKind::validation, "mode = fixed needs dim >= 1");
  }
  if (p.mode != PcaMode::fixed && s.has("dim")) {
    throw s.error(ErrorKind::validation, "dim is only used with mode = fixed");
  }
  const auto pop = s.get_string("population", "stimuli");
  if (pop == "stimuli") {
    p.population = PcaPopulation::stimuli;
  } else if (pop == "fold") {
    p.population = PcaPopulation::fold;
  } else {
    throw s.error(ErrorKind::validation,
                  fmt::format("population '{}' is not stimuli or fold", pop));
  }
  s.finish();
}

ModelSpec read_model(const ini::ptree& tree, const std::string& source, const std::string& id,
                     const fs::path& base) {
  ini::Section s(&tree, source, "model." + id);
  if (id.empty() || id.find_first_of(",/\\ \t") != std::string::npos) {
    throw s.error(ErrorKind::validation, "model ids may not be empty or contain , / \\ or spaces");
  }
  ModelSpec m;
  m.model_id = id;
  std::set<std::int32_t> seen;
  for (const auto& [key, value] : tree) {
    const auto layer = text::parse_int<std::int32_t>(key);
    if (!layer) throw s.error(ErrorKind::parse, fmt::format("layer key '{}' is not an integer", key));
    if (!seen.insert(*layer).second) {
      throw s.error(ErrorKind::validation, fmt::format("layer {} listed twice", *layer));
    }
    LayerFile lf{*layer, resolve(base, s.raw(key))};
    require_file(lf.path, fmt::format("store for model {} layer {}", id, *layer));
    m.layers.push_back(std::move(lf));
  }
  if (m.layers.empty()) throw s.error(ErrorKind::validation, "model lists no layers");
  std::sort(m.layers.begin(), m.layers.end(),
            [](const LayerFile& a, const LayerFile& b) { return a.layer_id < b.layer_id; });
  return m;
}

} // namespace

std::vector<ContrastSpec> ExperimentConfig::contrasts() const {
  std::vector<ContrastSpec> out;
  if (builtin_stops) {
    for (const auto& p : places) {
      out.push_back(phonemic_stop_contrast(place_by_name(p), confound_policy));
      out.push_back(phonetic_stop_contrast(place_by_name(p), confound_policy));
    }
  }
  if (builtin_controls) {
    for (auto& c : control_contrasts()) out.push_back(std::move(c));
  }
  for (const auto& cc : custom) {
    out.push_back(make_contrast(cc.name, cc.place, cc.kind, cc.group1, cc.group2, cc.confound));
  }
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& c : out) {
    if (!keys.emplace(c.name, c.place).second) {
      throw Error(ErrorKind::validation,
                  fmt::format("contrast '{}' place '{}' is defined twice", c.name, c.place));
    }
  }
  return out;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source,
                              const fs::path& base_dir) {
  const auto tree = ini::read(in, source);
  ExperimentConfig c;
  c.output = resolve(base_dir, c.output.string());
  for (const auto& [name, section] : tree) {
    const bool known = name == "experiment" || name == "corpus" || name == "contrasts" ||
                       name == "cv" || name == "metric" || name == "pca" ||
                       name.rfind("model.", 0) == 0 || name.rfind("contrast.", 0) == 0;
    if (!known) throw Error(ErrorKind::validation, fmt::format("{}: unknown section [{}]", source, name));
  }
  read_experiment(ini::section(tree, source, "experiment"), c, base_dir);
  read_corpus(ini::section(tree, source, "corpus"), c, base_dir);
  read_contrasts(ini::section(tree, source, "contrasts"), c);
  read_cv(ini::section(tree, source, "cv"), c);
  read_metric(ini::section(tree, source, "metric"), c);
  read_pca(ini::section(tree, source, "pca"), c);
  for (const auto& [name, section] : tree) {
    if (name.rfind("model.", 0) == 0) {
      c.models.push_back(read_model(section, source, name.substr(6), base_dir));
    } else if (name.rfind("contrast.", 0) == 0) {
      c.custom.push_back(read_custom(ini::Section(&section, source, name), name.substr(9)));
    }
  }
  if (c.models.empty()) {
    throw Error(ErrorKind::validation, fmt::format("{}: no [model.ID] section", source));
  }
  require_file(c.alignments, "alignment file");
  if (c.contrasts().empty()) {
    throw Error(ErrorKind::validation, fmt::format("{}: no contrasts selected", source));
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open config '{}'", path.string()));
  const auto base = fs::absolute(path).parent_path();
  return parse_config(in, path.string(), base);
}

std::string to_string(PcaMode mode) {
  switch (mode) {
  case PcaMode::off: return "off";
  case PcaMode::fixed: return "fixed";
  case PcaMode::select_dstar: return "select_dstar";
  }
  return "?";
}

std::string to_string(PcaPopulation population) {
  return population == PcaPopulation::stimuli ? "stimuli" : "fold";
}

std::string to_string(AucVariant variant) {
  return variant == AucVariant::one_vs_one ? "one_vs_one" : "one_vs_rest";
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
  out << "[experiment]\n"
      << "seed = " << c.seed << '\n'
      << "output = " << c.output.string() << '\n'
      << "jobs = " << c.jobs << "\n\n";
  out << "[corpus]\n"
      << "alignments = " << c.alignments.string() << '\n'
      << "include_pseudowords = " << (c.include_pseudowords ? "true" : "false") << "\n\n";
  std::vector<std::string> builtin;
  if (c.builtin_stops) builtin.push_back("stops");
  if (c.builtin_controls) builtin.push_back("controls");
  if (builtin.empty()) builtin.push_back("none");
  out << "[contrasts]\n"
      << "builtin = " << join(builtin, ", ") << '\n'
      << "places = " << join(c.places, ", ") << '\n'
      << "confound_policy = "
      << (c.confound_policy == ConfoundPolicy::drop_own_stop ? "drop_own_stop" : "verbatim")
      << "\n\n";
  for (const auto& cc : c.custom) {
    out << "[contrast." << cc.name << "]\n"
        << "kind = " << to_string(cc.kind) << '\n';
    if (!cc.place.empty()) out << "place = " << cc.place << '\n';
    out << "group1 = " << join(cc.group1, " ; ") << '\n'
        << "group2 = " << join(cc.group2, " ; ") << '\n';
    if (!cc.confound.empty()) out << "confound = " << join(cc.confound, " ; ") << '\n';
    out << '\n';
  }
  std::vector<std::string> lambdas;
  for (double l : c.cv.lambdas) lambdas.push_back(text::format_double(l));
  out << "[cv]\n"
      << "outer_folds = " << c.cv.outer_folds << '\n'
      << "inner_folds = " << c.cv.inner_folds << '\n'
      << "lambdas = " << join(lambdas, ", ") << '\n'
      << "tol = " << text::format_double(c.cv.tol) << '\n'
      << "max_iter = " << c.cv.max_iter << '\n'
      << "permute_labels = " << (c.cv.permute_labels ? "true" : "false") << "\n\n";
  out << "[metric]\n"
      << "variant = " << to_string(c.variant) << "\n\n";
  out << "[pca]\n"
      << "mode = " << to_string(c.pca.mode) << '\n';
  if (c.pca.mode == PcaMode::fixed) out << "dim = " << c.pca.dim << '\n';
  out << "population = " << to_string(c.pca.population) << "\n\n";
  for (const auto& m : c.models) {
    out << "[model." << m.model_id << "]\n";
    for (const auto& l : m.layers) out << l.layer_id << " = " << l.path.string() << '\n';
    out << '\n';
  }
}

} // namespace phonoprobe
