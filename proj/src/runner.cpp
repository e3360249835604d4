#include "phonoprobe/runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "phonoprobe/contrasts.hpp"
#include "phonoprobe/error.hpp"
#include "phonoprobe/parallel.hpp"
#include "phonoprobe/xval.hpp"

namespace phonoprobe {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || std::memcmp(&a, &b, sizeof a) == 0;
}

std::string place_label(const std::string& place) { return place.empty() ? "-" : place; }

using TokenKey = std::pair<std::string, int>;

TokenKey key_of(const PhoneToken& t) { return {t.utterance_id, t.index_in_word}; }

struct Prepared {
  const MatchedContrast* matched = nullptr;
  std::vector<std::size_t> rows; // population row of each target
};

// Corpus, matched contrasts and the stimulus population shared by every
// stage of a run.
class Experiment {
public:
  Experiment(const ExperimentConfig& config, bool need_controls) {
    LoadStats stats;
    auto corpus = load_alignments(config.alignments, &stats);
    log_.push_back(fmt::format("corpus {}: {} rows, {} silence rows dropped, {} words, {} pseudowords",
                               config.alignments.filename().string(), stats.rows,
                               stats.dropped_silence, corpus.word_count(),
                               corpus.pseudoword_count()));
    if (!config.include_pseudowords) {
      corpus = corpus.words_only();
      log_.push_back(fmt::format("pseudowords excluded: {} utterances remain",
                                 corpus.utterances().size()));
    }
    const auto inventory = build_inventory(corpus);

    for (auto& spec : config.contrasts()) configured_.push_back({std::move(spec), {}});
    if (need_controls) {
      for (auto& spec : control_contrasts()) controls_.push_back({std::move(spec), {}});
    }
    for (auto* group : {&configured_, &controls_}) {
      for (auto& m : *group) {
        m.targets = match(corpus, inventory, m.spec);
        std::array<std::size_t, 3> counts{};
        for (const auto& t : m.targets) ++counts[static_cast<std::size_t>(t.label)];
        log_.push_back(fmt::format("matched {} {}: group1={} group2={} confound={}", m.spec.name,
                                   place_label(m.spec.place), counts[0], counts[1], counts[2]));
      }
    }
    check_partition();

    for (auto* group : {&configured_, &controls_}) {
      for (const auto& m : *group) {
        Prepared p{&m, {}};
        for (const auto& t : m.targets) p.rows.push_back(add_stimulus(t.token));
        (group == &configured_ ? prepared_ : prepared_controls_).push_back(std::move(p));
      }
    }
    log_.push_back(fmt::format("stimulus population: {} tokens", stimuli_.size()));
  }

  const std::vector<MatchedContrast>& configured() const { return configured_; }
  const std::vector<Prepared>& prepared() const { return prepared_; }
  const std::vector<Prepared>& prepared_controls() const { return prepared_controls_; }
  const std::vector<PhoneToken>& stimuli() const { return stimuli_; }
  std::vector<std::string>& log() { return log_; }

  PooledLayer pool_layer(const ModelSpec& model, const LayerFile& lf) {
    const auto store = read_store(lf.path);
    if (store.header().layer_id != lf.layer_id) {
      throw Error(ErrorKind::validation,
                  fmt::format("store '{}' holds layer {} but the config lists it as layer {}",
                              lf.path.string(), store.header().layer_id, lf.layer_id));
    }
    PooledLayer out;
    out.model_id = model.model_id;
    out.layer_id = lf.layer_id;
    out.tokens = stimuli_;
    out.values.resize(static_cast<Eigen::Index>(stimuli_.size()),
                      static_cast<Eigen::Index>(store.header().dim));
    out.skipped.assign(stimuli_.size(), {});
    std::size_t n_skipped = 0;
    for (std::size_t i = 0; i < stimuli_.size(); ++i) {
      PoolResult r;
      try {
        r = pool(store, stimuli_[i]);
      } catch (const Error& e) {
        rethrow_with_context(e, fmt::format("model {} layer {}", model.model_id, lf.layer_id));
      }
      if (const auto* v = std::get_if<PhoneVector>(&r)) {
        out.values.row(static_cast<Eigen::Index>(i)) = v->values.transpose();
      } else {
        out.skipped[i] = std::get<PoolSkip>(r).reason;
        out.values.row(static_cast<Eigen::Index>(i)).setConstant(std::nan(""));
        ++n_skipped;
      }
    }
    log_.push_back(fmt::format("pooled {} layer {}: dim {}, {} tokens, {} skipped", model.model_id,
                               lf.layer_id, store.header().dim, stimuli_.size(), n_skipped));
    for (std::size_t i = 0; i < stimuli_.size(); ++i) {
      if (!out.skipped[i].empty()) log_.push_back("  skip: " + out.skipped[i]);
    }
    return out;
  }

private:
  std::size_t add_stimulus(const PhoneToken& t) {
    const auto [it, inserted] = index_.emplace(key_of(t), stimuli_.size());
    if (inserted) stimuli_.push_back(t);
    return it->second;
  }

  // Phonemic and phonetic contrasts of one place must claim the same tokens.
  void check_partition() {
    std::map<std::string, std::map<ContrastKind, std::set<TokenKey>>> by_place;
    for (const auto& m : configured_) {
      if (m.spec.kind != ContrastKind::phonemic && m.spec.kind != ContrastKind::phonetic) continue;
      auto& s = by_place[m.spec.place][m.spec.kind];
      for (const auto& t : m.targets) s.insert(key_of(t.token));
    }
    for (const auto& [place, kinds] : by_place) {
      if (kinds.size() != 2) continue;
      const auto& a = kinds.at(ContrastKind::phonemic);
      const auto& b = kinds.at(ContrastKind::phonetic);
      log_.push_back(fmt::format("partition {}: phonemic {} tokens, phonetic {} tokens, identical={}",
                                 place_label(place), a.size(), b.size(), a == b ? "yes" : "no"));
    }
  }

  std::vector<MatchedContrast> configured_, controls_;
  std::vector<Prepared> prepared_, prepared_controls_;
  std::vector<PhoneToken> stimuli_;
  std::map<TokenKey, std::size_t> index_;
  std::vector<std::string> log_;
};

// How a layer's features are reduced before probing.
struct Reduction {
  const PCAProjection* pca = nullptr; // stimuli population
  std::size_t fold_dim = 0;           // fold population
  std::size_t d = 0;                  // target dimension; 0 means none
};

struct Evaluation {
  ResultRow row;
  std::size_t unconverged = 0;
};

Evaluation evaluate(const ExperimentConfig& config, const PooledLayer& layer, const Prepared& p,
                    const Reduction& red) {
  const auto& spec = p.matched->spec;
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    if (!layer.skipped[p.rows[i]].empty()) continue;
    rows.push_back(static_cast<Eigen::Index>(p.rows[i]));
    labels.push_back(static_cast<int>(p.matched->targets[i].label));
  }
  if (rows.empty()) throw Error(ErrorKind::data, "every target token was skipped during pooling");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), layer.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = layer.values.row(rows[i]);
  }

  ResultRow row;
  row.model_id = layer.model_id;
  row.layer_id = layer.layer_id;
  row.contrast = spec.name;
  row.place = spec.place;
  row.kind = spec.kind;
  row.d = static_cast<std::size_t>(X.cols());
  CvOptions options;
  options.tol = config.cv.tol;
  options.max_iter = config.cv.max_iter;
  options.variant = config.variant;
  if (red.pca) {
    row.d = std::min(red.d, red.pca->available());
    X = project(*red.pca, X, row.d);
  } else if (red.fold_dim) {
    options.fold_pca_dim = red.fold_dim;
    row.d = std::min(red.fold_dim, row.d);
  }

  const std::uint64_t seed = mix(config.seed, fnv1a(spec.name + "/" + spec.place));
  if (config.cv.permute_labels) {
    std::mt19937_64 rng(mix(seed, 0x7065726d));
    std::shuffle(labels.begin(), labels.end(), rng);
  }
  std::array<std::size_t, 3> counts{};
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  row.n_samples = labels.size();
  row.n_group1 = counts[0];
  row.n_group2 = counts[1];
  row.n_confound = counts[2];

  const auto plan = make_fold_plan(labels, config.cv.outer_folds, config.cv.inner_folds, seed);
  const auto score =
      nested_cv_evaluate(X, labels, spec.class_count(), config.cv.lambdas, plan, options);
  row.auc_weighted = score.aggregate;
  row.auc_12 = score.mean_pair_auc(0, 1);
  const double nan = std::nan("");
  row.auc_1c = spec.class_count() == 3 ? score.mean_pair_auc(0, 2) : nan;
  row.auc_2c = spec.class_count() == 3 ? score.mean_pair_auc(1, 2) : nan;
  Evaluation ev;
  for (const auto& f : score.folds) {
    row.lambdas.push_back(f.lambda);
    ev.unconverged += f.converged ? 0 : 1;
  }
  ev.row = std::move(row);
  return ev;
}

std::string context(const PooledLayer& layer, const ContrastSpec& spec, std::size_t d) {
  return fmt::format("model {} layer {} contrast {} place {}{}", layer.model_id, layer.layer_id,
                     spec.name, place_label(spec.place), d ? fmt::format(" d={}", d) : "");
}

class ModelRun {
public:
  ModelRun(const ExperimentConfig& config, Experiment& ex, const ModelSpec& model)
      : config_(config), ex_(ex), model_(model) {
    for (const auto& lf : model.layers) layers_.push_back(ex.pool_layer(model, lf));
    if (config.pca.mode != PcaMode::off && config.pca.population == PcaPopulation::stimuli) {
      for (const auto& layer : layers_) {
        std::vector<Eigen::Index> ok;
        for (std::size_t i = 0; i < layer.skipped.size(); ++i) {
          if (layer.skipped[i].empty()) ok.push_back(static_cast<Eigen::Index>(i));
        }
        Eigen::MatrixXd pop(static_cast<Eigen::Index>(ok.size()), layer.values.cols());
        for (std::size_t i = 0; i < ok.size(); ++i) {
          pop.row(static_cast<Eigen::Index>(i)) = layer.values.row(ok[i]);
        }
        try {
          pcas_.push_back(fit_pca(pop));
        } catch (const Error& e) {
          rethrow_with_context(e, fmt::format("PCA of model {} layer {}", model.model_id,
                                              layer.layer_id));
        }
      }
    }
  }

  std::size_t max_dim() const {
    std::size_t D = 0;
    for (const auto& l : layers_) D = std::max(D, static_cast<std::size_t>(l.values.cols()));
    return D;
  }

  ModelSelection select() {
    ModelSelection sel;
    sel.model_id = model_.model_id;
    const auto grid = dimension_grid(max_dim());
    const auto& controls = ex_.prepared_controls();
    struct Task {
      std::size_t d, layer, control;
    };
    std::vector<Task> tasks;
    for (auto d : grid) {
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        for (std::size_t c = 0; c < controls.size(); ++c) tasks.push_back({d, l, c});
      }
    }
    std::vector<double> aggregate(tasks.size());
    run_tasks(tasks.size(), [&](std::size_t i) {
      const auto& t = tasks[i];
      const auto ev = evaluate(config_, layers_[t.layer], controls[t.control], reduction(t.layer, t.d));
      aggregate[i] = ev.row.auc_weighted;
      return ev.unconverged;
    }, [&](std::size_t i) {
      const auto& t = tasks[i];
      return context(layers_[t.layer], controls[t.control].matched->spec, t.d);
    });
    std::map<std::size_t, double> per_d;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& t = tasks[i];
      auto& s = sel.scores[t.d][layers_[t.layer].layer_id];
      switch (t.control) {
      case 0: s.p1 = aggregate[i]; break;
      case 1: s.p2 = aggregate[i]; break;
      case 2: s.n1 = aggregate[i]; break;
      default: s.n2 = aggregate[i]; break;
      }
    }
    for (const auto& [d, scores] : sel.scores) per_d[d] = control_score(scores);
    sel.result = select_dim(per_d);
    for (const auto& [d, s] : sel.result.score) {
      ex_.log().push_back(fmt::format("control score {} d={}: {}", model_.model_id, d, s));
    }
    ex_.log().push_back(fmt::format("selected d* = {} for {}", sel.result.d_star, model_.model_id));
    d_star_ = sel.result.d_star;
    return sel;
  }

  std::vector<ResultRow> evaluate_all() {
    const auto& prepared = ex_.prepared();
    const std::size_t n = layers_.size() * prepared.size();
    std::vector<ResultRow> rows(n);
    run_tasks(n, [&](std::size_t i) {
      const auto l = i / prepared.size();
      auto ev = evaluate(config_, layers_[l], prepared[i % prepared.size()], reduction(l, target_dim()));
      rows[i] = std::move(ev.row);
      return ev.unconverged;
    }, [&](std::size_t i) {
      return context(layers_[i / prepared.size()], prepared[i % prepared.size()].matched->spec,
                     target_dim());
    });
    return rows;
  }

private:
  std::size_t target_dim() const {
    switch (config_.pca.mode) {
    case PcaMode::off: return 0;
    case PcaMode::fixed: return config_.pca.dim;
    case PcaMode::select_dstar: return d_star_;
    }
    return 0;
  }

  Reduction reduction(std::size_t layer, std::size_t d) const {
    Reduction r;
    if (d == 0) return r;
    r.d = d;
    if (config_.pca.population == PcaPopulation::stimuli) {
      r.pca = &pcas_.at(layer);
    } else {
      r.fold_dim = d;
    }
    return r;
  }

  template <class Fn, class Ctx>
  void run_tasks(std::size_t n, Fn&& fn, Ctx&& ctx) {
    std::vector<std::size_t> unconverged(n, 0);
    parallel_for(n, config_.jobs, [&](std::size_t i) {
      try {
        unconverged[i] = fn(i);
      } catch (const Error& e) {
        rethrow_with_context(e, ctx(i));
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (unconverged[i]) {
        ex_.log().push_back(fmt::format("warning: {}: {} outer refits stopped before tol",
                                        ctx(i), unconverged[i]));
      }
    }
  }

  const ExperimentConfig& config_;
  Experiment& ex_;
  const ModelSpec& model_;
  std::vector<PooledLayer> layers_;
  std::vector<PCAProjection> pcas_;
  std::size_t d_star_ = 0;
};

} // namespace

bool ResultRow::operator==(const ResultRow& o) const {
  if (lambdas.size() != o.lambdas.size()) return false;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!same_double(lambdas[i], o.lambdas[i])) return false;
  }
  return model_id == o.model_id && layer_id == o.layer_id && contrast == o.contrast &&
         place == o.place && kind == o.kind && d == o.d && n_samples == o.n_samples &&
         n_group1 == o.n_group1 && n_group2 == o.n_group2 && n_confound == o.n_confound &&
         same_double(auc_weighted, o.auc_weighted) && same_double(auc_12, o.auc_12) &&
         same_double(auc_1c, o.auc_1c) && same_double(auc_2c, o.auc_2c);
}

const ResultRow* ResultsTable::find(const std::string& model_id, std::int32_t layer_id,
                                    const std::string& contrast, const std::string& place) const {
  for (const auto& r : rows) {
    if (r.model_id == model_id && r.layer_id == layer_id && r.contrast == contrast &&
        r.place == place) {
      return &r;
    }
  }
  return nullptr;
}

void add_mean_rows(ResultsTable& table) {
  using Key = std::tuple<std::string, std::int32_t, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : table.rows) {
    if (r.place == kMeanPlace) continue;
    Key k{r.model_id, r.layer_id, r.contrast};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&r);
  }
  std::vector<ResultRow> out;
  for (const auto& k : order) {
    const auto& group = groups[k];
    for (const auto* r : group) out.push_back(*r);
    std::vector<const ResultRow*> placed;
    for (const auto* r : group) {
      if (!r->place.empty()) placed.push_back(r);
    }
    if (placed.empty()) continue;
    ResultRow m = *placed.front();
    m.place = kMeanPlace;
    m.lambdas.clear();
    m.n_samples = m.n_group1 = m.n_group2 = m.n_confound = 0;
    m.auc_weighted = m.auc_12 = m.auc_1c = m.auc_2c = 0.0;
    for (const auto* r : placed) {
      m.n_samples += r->n_samples;
      m.n_group1 += r->n_group1;
      m.n_group2 += r->n_group2;
      m.n_confound += r->n_confound;
      m.auc_weighted += r->auc_weighted;
      m.auc_12 += r->auc_12;
      m.auc_1c += r->auc_1c;
      m.auc_2c += r->auc_2c;
      if (r->d != m.d) m.d = 0;
    }
    const auto n = static_cast<double>(placed.size());
    m.auc_weighted /= n;
    m.auc_12 /= n;
    m.auc_1c /= n;
    m.auc_2c /= n;
    out.push_back(std::move(m));
  }
  table.rows = std::move(out);
}

std::vector<MatchedContrast> match_contrasts(const ExperimentConfig& config) {
  return Experiment(config, false).configured();
}

std::vector<PooledLayer> pool_stimuli(const ExperimentConfig& config) {
  Experiment ex(config, false);
  std::vector<PooledLayer> out;
  for (const auto& model : config.models) {
    for (const auto& lf : model.layers) out.push_back(ex.pool_layer(model, lf));
  }
  return out;
}

std::vector<ModelSelection> select_dimensions(const ExperimentConfig& config) {
  auto c = config;
  c.pca.mode = PcaMode::select_dstar;
  Experiment ex(c, true);
  std::vector<ModelSelection> out;
  for (const auto& model : c.models) {
    ModelRun run(c, ex, model);
    out.push_back(run.select());
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const bool selecting = config.pca.mode == PcaMode::select_dstar;
  Experiment ex(config, selecting);
  ExperimentResult result;
  for (const auto& model : config.models) {
    ModelRun run(config, ex, model);
    if (selecting) result.selections.push_back(run.select());
    for (auto& r : run.evaluate_all()) result.table.rows.push_back(std::move(r));
  }
  add_mean_rows(result.table);
  result.log = std::move(ex.log());
  return result;
}

} // namespace phonoprobe
