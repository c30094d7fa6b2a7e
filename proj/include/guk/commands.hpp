#pragma once

// Command implementations behind the gukform CLI. Each returns a process exit code.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "guk/sim.hpp"

namespace guk::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kHalted = 2, kIoError = 3 };

struct RunOptions {
  std::string scenario = "paper-sec5";
  std::optional<bool> region;
  std::optional<sim::LeaderMode> leader_mode;
  std::optional<sim::ForceMode> force_mode;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::vector<std::string> overrides;  // key=value, applied after the flags above
};

/// Loads the scenario and applies flags then overrides. Throws like load_scenario.
sim::ScenarioConfig resolve_config(const RunOptions& opts);

struct SimulateOptions {
  RunOptions run;
  std::filesystem::path out_dir = "out";
  std::size_t stride = 1;
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);

/// Spanning tree, L̄ spectrum, threshold and α²/β; exit 0 only when both checks pass.
int cmd_check(const RunOptions& opts, std::ostream& out, std::ostream& err);

struct GainPair {
  double alpha = 0.0;
  double beta = 0.0;
};

/// "2:1,4:1,2:4" → pairs. Throws InvalidInput on malformed text.
std::vector<GainPair> parse_pairs(const std::string& text);

struct SweepOptions {
  RunOptions run;
  std::vector<GainPair> pairs{{2.0, 1.0}, {4.0, 1.0}, {2.0, 4.0}};
  std::filesystem::path out_dir = "sweep";
  std::size_t stride = 1;
  unsigned jobs = 0;  // 0: one thread per pair
};

/// Independent runs per gain pair, each in its own subdirectory, plus fig9_errors.csv
/// and sweep.json comparing settling times with the slowest characteristic root.
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

/// Prints the scenario (after flags and overrides) as a JSON document.
int cmd_export(const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace guk::cli
