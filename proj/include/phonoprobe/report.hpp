#ifndef PHONOPROBE_REPORT_HPP
#define PHONOPROBE_REPORT_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "phonoprobe/runner.hpp"

namespace phonoprobe {

/// Header of results.csv, in column order.
const std::vector<std::string>& results_columns();

void write_results_csv(const ResultsTable& table, std::ostream& out);
ResultsTable read_results_csv(std::istream& in, const std::string& source);
ResultsTable read_results_csv(const std::filesystem::path& path);

void write_selection_csv(const std::vector<ModelSelection>& selections, std::ostream& out);

/// One line chart of weighted AUC against layer_id for a contrast. Uses the
/// "mean" rows when the contrast has places. Layer-0 rows are drawn as
/// horizontal red baselines.
std::string render_chart(const ResultsTable& table, const std::string& contrast);

/// Writes results.csv and figures/<contrast>.svg under `dir`; returns the
/// files written.
std::vector<std::filesystem::path> emit_report(const ResultsTable& table,
                                               const std::filesystem::path& dir);

/// emit_report plus selection.csv and run_log.txt.
std::vector<std::filesystem::path> write_experiment_outputs(const ExperimentResult& result,
                                                            const std::filesystem::path& dir);

} // namespace phonoprobe

#endif
