#include "phonoprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "phonoprobe/error.hpp"
#include "text.hpp"

namespace phonoprobe {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return std::isnan(v) ? std::string() : text::format_double(v); }

double parse_num(std::string_view s, const std::string& where) {
  if (text::trim(s).empty()) return std::nan("");
  const auto v = text::parse_double(s);
  if (!v) throw Error(ErrorKind::parse, fmt::format("{}: '{}' is not a number", where, s));
  return *v;
}

template <class Int>
Int parse_count(std::string_view s, const std::string& where) {
  const auto v = text::parse_int<Int>(s);
  if (!v) throw Error(ErrorKind::parse, fmt::format("{}: '{}' is not an integer", where, s));
  return *v;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::io, fmt::format("cannot create directory '{}'{}", dir.string(),
                                           ec ? ": " + ec.message() : ""));
  }
}

void finish(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::io, fmt::format("error writing '{}'", path.string()));
}

const char* const kPalette[] = {"#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
                                "#17becf", "#8c564b", "#e377c2", "#7f7f7f"};

} // namespace

const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols{
      "model_id", "layer_id",   "contrast",     "place",  "kind",   "d",      "n_samples",
      "n_group1", "n_group2",   "n_confound",   "auc_weighted", "auc_12", "auc_1c", "auc_2c",
      "lambdas"};
  return cols;
}

void write_results_csv(const ResultsTable& table, std::ostream& out) {
  const auto& cols = results_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : table.rows) {
    std::string lambdas;
    for (std::size_t i = 0; i < r.lambdas.size(); ++i) {
      if (i) lambdas += ';';
      lambdas += text::format_double(r.lambdas[i]);
    }
    out << r.model_id << ',' << r.layer_id << ',' << r.contrast << ',' << r.place << ','
        << to_string(r.kind) << ',' << r.d << ',' << r.n_samples << ',' << r.n_group1 << ','
        << r.n_group2 << ',' << r.n_confound << ',' << num(r.auc_weighted) << ','
        << num(r.auc_12) << ',' << num(r.auc_1c) << ',' << num(r.auc_2c) << ',' << lambdas
        << '\n';
  }
}

ResultsTable read_results_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, source + ": empty results file");
  std::string expected;
  for (const auto& c : results_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) {
    throw Error(ErrorKind::parse, fmt::format("{}:1: header does not match the results schema", source));
  }
  ResultsTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto where = fmt::format("{}:{}", source, line_no);
    const auto f = text::split(line, ',');
    if (f.size() != results_columns().size()) {
      throw Error(ErrorKind::parse, fmt::format("{}: expected {} fields, found {}", where,
                                                results_columns().size(), f.size()));
    }
    ResultRow r;
    r.model_id = std::string(f[0]);
    r.layer_id = parse_count<std::int32_t>(f[1], where);
    r.contrast = std::string(f[2]);
    r.place = std::string(f[3]);
    const auto kind = parse_contrast_kind(std::string(f[4]));
    if (!kind) throw Error(ErrorKind::parse, fmt::format("{}: unknown kind '{}'", where, f[4]));
    r.kind = *kind;
    r.d = parse_count<std::size_t>(f[5], where);
    r.n_samples = parse_count<std::size_t>(f[6], where);
    r.n_group1 = parse_count<std::size_t>(f[7], where);
    r.n_group2 = parse_count<std::size_t>(f[8], where);
    r.n_confound = parse_count<std::size_t>(f[9], where);
    r.auc_weighted = parse_num(f[10], where);
    r.auc_12 = parse_num(f[11], where);
    r.auc_1c = parse_num(f[12], where);
    r.auc_2c = parse_num(f[13], where);
    if (!f[14].empty()) {
      for (auto part : text::split(f[14], ';')) r.lambdas.push_back(parse_num(part, where));
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

ResultsTable read_results_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open results '{}'", path.string()));
  return read_results_csv(in, path.string());
}

void write_selection_csv(const std::vector<ModelSelection>& selections, std::ostream& out) {
  out << "model_id,d,layer_id,p1,p2,n1,n2,score,selected\n";
  auto opt = [](const std::optional<double>& v) { return v ? text::format_double(*v) : ""; };
  for (const auto& sel : selections) {
    for (const auto& [d, layers] : sel.scores) {
      for (const auto& [layer, s] : layers) {
        const double score = s.p1.value_or(NAN) + s.p2.value_or(NAN) - s.n1.value_or(NAN) -
                             s.n2.value_or(NAN);
        out << sel.model_id << ',' << d << ',' << layer << ',' << opt(s.p1) << ',' << opt(s.p2)
            << ',' << opt(s.n1) << ',' << opt(s.n2) << ',' << num(score) << ",\n";
      }
      const auto it = sel.result.score.find(d);
      out << sel.model_id << ',' << d << ",all,,,,,"
          << (it == sel.result.score.end() ? "" : text::format_double(it->second)) << ','
          << (d == sel.result.d_star ? 1 : 0) << '\n';
    }
  }
}

std::string render_chart(const ResultsTable& table, const std::string& contrast) {
  std::vector<const ResultRow*> rows;
  bool has_mean = false;
  for (const auto& r : table.rows) {
    if (r.contrast == contrast && r.place == kMeanPlace) has_mean = true;
  }
  for (const auto& r : table.rows) {
    if (r.contrast != contrast) continue;
    if (has_mean ? r.place == kMeanPlace : true) rows.push_back(&r);
  }
  if (rows.empty()) {
    throw Error(ErrorKind::contract, fmt::format("no rows for contrast '{}'", contrast));
  }
  // Without mean rows, a contrast may still carry one row per place; those
  // become separate series.
  auto series_name = [&](const ResultRow& r) {
    return has_mean || r.place.empty() ? r.model_id : r.model_id + " " + r.place;
  };

  std::vector<std::string> series_order;
  std::map<std::string, std::vector<std::pair<std::int32_t, double>>> series;
  std::vector<std::pair<std::string, double>> baselines;
  std::set<std::int32_t> ticks;
  for (const auto* r : rows) {
    if (r->layer_id == 0) {
      baselines.emplace_back(series_name(*r), r->auc_weighted);
      continue;
    }
    const auto name = series_name(*r);
    if (!series.count(name)) series_order.push_back(name);
    series[name].emplace_back(r->layer_id, r->auc_weighted);
    ticks.insert(r->layer_id);
  }
  if (ticks.empty()) ticks.insert(0);

  constexpr double W = 720, H = 420, left = 60, right = 180, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  const double x_lo = *ticks.begin(), x_hi = *ticks.rbegin();
  auto xpos = [&](double layer) {
    return x_hi == x_lo ? left + pw / 2 : left + (layer - x_lo) / (x_hi - x_lo) * pw;
  };
  auto ypos = [&](double auc) {
    const double v = std::isnan(auc) ? 0.0 : std::clamp(auc, 0.0, 1.0);
    return top + (1.0 - v) * ph;
  };

  std::ostringstream svg;
  svg << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      W, H, W, H);
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << fmt::format("<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">{}{}</text>\n",
                     left, xml_escape(contrast), has_mean ? " (mean over places)" : "");
  // Axes and horizontal grid.
  svg << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left,
                     top, top + ph);
  svg << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left,
                     top + ph, left + pw);
  for (int i = 0; i <= 10; i += 2) {
    const double v = i / 10.0;
    svg << fmt::format("<g class=\"ytick\"><line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" "
                       "stroke=\"#dddddd\"/><text x=\"{3}\" y=\"{4:.2f}\" font-family=\"sans-serif\" "
                       "font-size=\"11\" text-anchor=\"end\">{5:.1f}</text></g>\n",
                       left, ypos(v), left + pw, left - 6, ypos(v) + 4, v);
  }
  svg << fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#999999\" "
                     "stroke-dasharray=\"2,3\"/>\n",
                     left, ypos(0.5), left + pw);
  for (auto t : ticks) {
    svg << fmt::format("<g class=\"xtick\"><line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" "
                       "stroke=\"black\"/><text x=\"{0:.2f}\" y=\"{3}\" font-family=\"sans-serif\" "
                       "font-size=\"11\" text-anchor=\"middle\">{4}</text></g>\n",
                       xpos(t), top + ph, top + ph + 5, top + ph + 18, t);
  }
  svg << fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\">layer</text>\n",
                     left + pw / 2, H - 10);
  svg << fmt::format("<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">weighted AUC</text>\n",
                     top + ph / 2, top + ph / 2);

  double legend_y = top + 10;
  auto legend = [&](const std::string& colour, const std::string& label, bool dashed) {
    svg << fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"{3}\" "
                       "stroke-width=\"2\"{4}/><text x=\"{5}\" y=\"{6:.2f}\" font-family=\"sans-serif\" "
                       "font-size=\"11\">{7}</text>\n",
                       W - right + 15, legend_y, W - right + 40, colour,
                       dashed ? " stroke-dasharray=\"6,4\"" : "", W - right + 46, legend_y + 4,
                       xml_escape(label));
    legend_y += 18;
  };

  for (std::size_t s = 0; s < series_order.size(); ++s) {
    auto points = series[series_order[s]];
    std::sort(points.begin(), points.end());
    const std::string colour = kPalette[s % std::size(kPalette)];
    std::string path;
    for (const auto& [layer, auc] : points) {
      path += fmt::format("{}{:.2f},{:.2f}", path.empty() ? "" : " ", xpos(layer), ypos(auc));
    }
    svg << fmt::format("<polyline class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" "
                       "points=\"{}\"/>\n",
                       colour, path);
    for (const auto& [layer, auc] : points) {
      svg << fmt::format("<circle class=\"marker\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\"/>\n",
                         xpos(layer), ypos(auc), colour);
    }
    legend(colour, series_order[s], false);
  }
  for (const auto& [name, auc] : baselines) {
    svg << fmt::format("<line class=\"baseline\" x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" "
                       "stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n",
                       left, ypos(auc), left + pw);
    legend("#d62728", name + " (layer 0)", true);
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<fs::path> emit_report(const ResultsTable& table, const fs::path& dir) {
  if (table.rows.empty()) throw Error(ErrorKind::contract, "cannot report an empty results table");
  make_dirs(dir / "figures");
  std::vector<fs::path> written;
  const auto csv = dir / "results.csv";
  {
    auto out = open_for_write(csv);
    write_results_csv(table, out);
    finish(out, csv);
  }
  written.push_back(csv);
  std::vector<std::string> contrasts;
  for (const auto& r : table.rows) {
    if (std::find(contrasts.begin(), contrasts.end(), r.contrast) == contrasts.end()) {
      contrasts.push_back(r.contrast);
    }
  }
  for (const auto& c : contrasts) {
    const auto path = dir / "figures" / (c + ".svg");
    auto out = open_for_write(path);
    out << render_chart(table, c);
    finish(out, path);
    written.push_back(path);
  }
  return written;
}

std::vector<fs::path> write_experiment_outputs(const ExperimentResult& result, const fs::path& dir) {
  auto written = emit_report(result.table, dir);
  if (!result.selections.empty()) {
    const auto path = dir / "selection.csv";
    auto out = open_for_write(path);
    write_selection_csv(result.selections, out);
    finish(out, path);
    written.push_back(path);
  }
  const auto log_path = dir / "run_log.txt";
  auto out = open_for_write(log_path);
  for (const auto& line : result.log) out << line << '\n';
  finish(out, log_path);
  written.push_back(log_path);
  return written;
}

} // namespace phonoprobe
