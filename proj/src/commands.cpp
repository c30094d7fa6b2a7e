#include "guk/commands.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "guk/scenario.hpp"
#include "guk/trace_io.hpp"

namespace guk::cli {
namespace {

std::string compact(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

std::string pair_label(const GainPair& p) { return "a" + compact(p.alpha) + "_b" + compact(p.beta); }

/// Runs body and maps the library's exception types onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    err << "error: I/O failure: " << e.what() << '\n';
    return kIoError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kHalted;
  }
}

void warn_gains(const sim::ScenarioConfig& c, std::ostream& err) {
  const auto topo = build_augmented_laplacian(c.adjacency, c.leader_links);
  if (!has_spanning_tree(topo)) {
    err << "warning: no spanning tree rooted at the leader; formation tracking is not guaranteed\n";
  }
  if (!check_gains(c.gains.alpha, c.gains.beta, topo)) {
    err << "warning: alpha^2/beta = " << c.gains.alpha * c.gains.alpha / c.gains.beta
        << " does not exceed the gain threshold " << gain_threshold(topo) << '\n';
  }
}

}  // namespace

sim::ScenarioConfig resolve_config(const RunOptions& opts) {
  auto c = scenario::load_scenario(opts.scenario);
  if (opts.region) c.region_enabled = *opts.region;
  if (opts.leader_mode) c.leader_mode = *opts.leader_mode;
  if (opts.force_mode) c.force_mode = *opts.force_mode;
  if (opts.dt) c.dt = *opts.dt;
  if (opts.horizon) c.horizon = *opts.horizon;
  for (const auto& o : opts.overrides) scenario::apply_override(c, o);
  sim::validate(c);
  return c;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(opts.run);
    warn_gains(config, err);
    const auto result = sim::run(config);
    io::write_run(opts.out_dir, result, config, opts.stride);
    const auto& s = result.summary;
    out << "scenario " << config.name << ": " << result.trace.records.size() << " steps to t = "
        << s.end_time << "\n  max error " << s.max_error << ", final error " << s.final_error
        << ", settling time ";
    if (s.settling_time) {
      out << *s.settling_time;
    } else {
      out << "none";
    }
    out << "\n  outer violations " << s.violation_steps << ", region active steps "
        << s.region_active_steps << "\n  wrote " << opts.out_dir.string() << '\n';
    if (s.halted) {
      err << "simulation halted: " << s.halt_reason << '\n';
      return static_cast<int>(kHalted);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_check(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(opts);
    const auto topo = build_augmented_laplacian(config.adjacency, config.leader_links);
    const bool tree = has_spanning_tree(topo);
    const auto spec = spectral_data(topo);
    const double ratio = config.gains.alpha * config.gains.alpha / config.gains.beta;
    const bool gains_ok = ratio > spec.gain_threshold;
    out << std::setprecision(10);
    out << "spanning tree: " << (tree ? "yes" : "no") << '\n';
    out << "eigenvalues of augmented Laplacian:";
    for (const auto& l : spec.eigenvalues) {
      out << ' ' << l.real();
      if (l.imag() != 0.0) out << (l.imag() > 0 ? "+" : "") << l.imag() << 'i';
    }
    out << "\ngain threshold: " << spec.gain_threshold << "\nalpha^2/beta: " << ratio
        << "\ngain condition: " << (gains_ok ? "pass" : "fail") << '\n';
    const bool ok = tree && gains_ok;
    out << (ok ? "PASS" : "FAIL") << '\n';
    return static_cast<int>(ok ? kOk : kValidation);
  });
}

std::vector<GainPair> parse_pairs(const std::string& text) {
  std::vector<GainPair> pairs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    GainPair p;
    std::size_t used_a = 0, used_b = 0;
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
      const std::string a = item.substr(0, colon);
      const std::string b = item.substr(colon + 1);
      p.alpha = std::stod(a, &used_a);
      p.beta = std::stod(b, &used_b);
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw InvalidInput("pairs: expected alpha:beta, got \"" + item + "\"");
    }
    if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !std::isfinite(p.alpha) || !std::isfinite(p.beta)) {
      throw InvalidInput("pairs: gains must be positive and finite in \"" + item + "\"");
    }
    pairs.push_back(p);
  }
  if (pairs.empty()) throw InvalidInput("pairs: at least one alpha:beta pair is required");
  return pairs;
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto base = resolve_config(opts.run);
    std::vector<sim::ScenarioConfig> configs;
    for (const auto& p : opts.pairs) {
      auto c = base;
      c.gains = {p.alpha, p.beta};
      sim::validate(c);
      warn_gains(c, err);
      configs.push_back(std::move(c));
    }

    std::vector<sim::RunResult> results(configs.size());
    std::vector<std::exception_ptr> failures(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) {
        try {
          results[i] = sim::run(configs[i]);
          io::write_run(opts.out_dir / pair_label(opts.pairs[i]), results[i], configs[i], opts.stride);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t threads =
        std::min<std::size_t>(configs.size(), opts.jobs == 0 ? hw : opts.jobs);
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    std::vector<io::SweepSeries> series;
    nlohmann::json report = nlohmann::json::array();
    const auto topo = build_augmented_laplacian(base.adjacency, base.leader_links);
    bool halted = false;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto& p = opts.pairs[i];
      const auto& s = results[i].summary;
      series.push_back({pair_label(p), &results[i].trace});
      const double root = slowest_follower_root(topo, p.alpha, p.beta);
      report.push_back({{"alpha", p.alpha},
                        {"beta", p.beta},
                        {"settling_time", s.settling_time ? nlohmann::json(*s.settling_time)
                                                          : nlohmann::json(nullptr)},
                        {"slowest_root", root},
                        {"halted", s.halted}});
      halted = halted || s.halted;
      out << pair_label(p) << ": settling time ";
      if (s.settling_time) {
        out << *s.settling_time;
      } else {
        out << "none";
      }
      out << ", slowest root " << root << '\n';
    }
    io::write_sweep_errors(opts.out_dir / "fig9_errors.csv", series, opts.stride);
    std::ofstream json_out(opts.out_dir / "sweep.json");
    if (!json_out) {
      throw std::filesystem::filesystem_error("cannot open for writing", opts.out_dir / "sweep.json",
                                              std::make_error_code(std::errc::permission_denied));
    }
    json_out << report.dump(2) << '\n';
    return static_cast<int>(halted ? kHalted : kOk);
  });
}

int cmd_export(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    out << scenario::to_json(resolve_config(opts)).dump(2) << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace guk::cli
