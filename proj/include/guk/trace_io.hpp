#pragma once

// CSV/JSON export of simulation traces, run summaries and plot-ready figure tables.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "guk/sim.hpp"

namespace guk::io {

/// Trace columns: t, per-robot state/error/force/torque/slip blocks, then the region diagnostics.
std::vector<std::string> trace_columns(Eigen::Index robots);

/// Rows 0, stride, 2·stride, ... plus the final record. Numbers use 17 significant digits.
void write_trace_csv(std::ostream& out, const sim::SimTrace& trace, std::size_t stride = 1);

nlohmann::json summary_json(const sim::RunSummary& summary, const sim::ScenarioConfig& config);

/// Figure tables named after the plotted quantity; region-off runs get the fig3/4/5 set,
/// region-on runs the fig6/7/8 set. Returns the file names written.
std::vector<std::string> write_figures(const std::filesystem::path& dir, const sim::SimTrace& trace,
                                       bool region_enabled, std::size_t stride = 1);

/// trace.csv, summary.json and the figure tables. Throws std::filesystem::filesystem_error
/// or std::ios_base::failure on I/O problems.
void write_run(const std::filesystem::path& dir, const sim::RunResult& result,
               const sim::ScenarioConfig& config, std::size_t stride = 1);

/// One labelled error series per sweep run, on a common time grid.
struct SweepSeries {
  std::string label;
  const sim::SimTrace* trace = nullptr;
};
void write_sweep_errors(const std::filesystem::path& file, const std::vector<SweepSeries>& series,
                        std::size_t stride = 1);

/// %.17g, with "nan"/"inf"/"-inf" for non-finite values.
std::string format_number(double x);

}  // namespace guk::io
