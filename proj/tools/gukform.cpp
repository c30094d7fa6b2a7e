// gukform: simulate, check and sweep leader-follower formation scenarios.

#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "guk/commands.hpp"

namespace {

using guk::cli::RunOptions;

void add_run_flags(CLI::App* cmd, RunOptions& opts, bool with_sim_flags) {
  cmd->add_option("--scenario", opts.scenario, "Scenario JSON file or preset name")
      ->capture_default_str();
  cmd->add_option("--override", opts.overrides,
                  "key=value (alpha, beta, gamma1, gamma2, hysteresis, dt, horizon, angular_rate, "
                  "seed, region, leader_mode, force_mode); repeatable")
      ->expected(1, -1)
      ->allow_extra_args();
  if (!with_sim_flags) return;
  static const std::map<std::string, bool> on_off{{"on", true}, {"off", false}};
  static const std::map<std::string, guk::sim::LeaderMode> leaders{
      {"prescribed", guk::sim::LeaderMode::kPrescribed}, {"dynamic", guk::sim::LeaderMode::kDynamic}};
  static const std::map<std::string, guk::sim::ForceMode> forces{
      {"ideal", guk::sim::ForceMode::kIdeal}, {"actuated", guk::sim::ForceMode::kActuated}};
  cmd->add_option_function<std::string>(
         "--region", [&opts](const std::string& v) { opts.region = on_off.at(v); },
         "Region constraint on|off")
      ->check(CLI::IsMember(on_off));
  cmd->add_option_function<std::string>(
         "--leader", [&opts](const std::string& v) { opts.leader_mode = leaders.at(v); },
         "Leader mode prescribed|dynamic")
      ->check(CLI::IsMember(leaders));
  cmd->add_option_function<std::string>(
         "--force", [&opts](const std::string& v) { opts.force_mode = forces.at(v); },
         "Force mode ideal|actuated")
      ->check(CLI::IsMember(forces));
  cmd->add_option_function<double>("--dt", [&opts](double v) { opts.dt = v; }, "Step size [s]");
  cmd->add_option_function<double>("--horizon", [&opts](double v) { opts.horizon = v; },
                                   "Simulated time [s]");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying formation tracking of wheeled mobile robots in a rectangular region"};
  app.require_subcommand(1);

  guk::cli::SimulateOptions simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one scenario and write trace, summary and figure data");
  add_run_flags(sim_cmd, simulate.run, true);
  sim_cmd->add_option("--out", simulate.out_dir, "Output directory")->capture_default_str();
  sim_cmd->add_option("--stride", simulate.stride, "Write every k-th step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  RunOptions check;
  auto* check_cmd = app.add_subcommand("check", "Spanning-tree and gain-condition check");
  add_run_flags(check_cmd, check, false);

  guk::cli::SweepOptions sweep;
  std::string pairs = "2:1,4:1,2:4";
  auto* sweep_cmd = app.add_subcommand("sweep", "Concurrent runs over alpha:beta pairs");
  add_run_flags(sweep_cmd, sweep.run, true);
  sweep_cmd->add_option("--pairs", pairs, "Comma-separated alpha:beta list")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->capture_default_str();
  sweep_cmd->add_option("--stride", sweep.stride, "Write every k-th step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (0: one per pair, capped at cores)");

  RunOptions exported;
  auto* export_cmd = app.add_subcommand("export", "Print the resolved scenario as JSON");
  add_run_flags(export_cmd, exported, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : guk::cli::kValidation;
  }

  if (*sim_cmd) return guk::cli::cmd_simulate(simulate, std::cout, std::cerr);
  if (*check_cmd) return guk::cli::cmd_check(check, std::cout, std::cerr);
  if (*sweep_cmd) {
    try {
      sweep.pairs = guk::cli::parse_pairs(pairs);
    } catch (const guk::InvalidInput& e) {
      std::cerr << "error: " << e.what() << '\n';
      return guk::cli::kValidation;
    }
    return guk::cli::cmd_sweep(sweep, std::cout, std::cerr);
  }
  return guk::cli::cmd_export(exported, std::cout, std::cerr);
}
