#include "guk/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace guk::io {
namespace {

std::ofstream open_output(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::filesystem::filesystem_error(
        "cannot open for writing", file, std::make_error_code(std::errc::permission_denied));
  }
  out.exceptions(std::ios::badbit | std::ios::failbit);
  return out;
}

class Row {
 public:
  explicit Row(std::ostream& out) : out_(out) {}
  Row& operator<<(double x) {
    sep();
    line_ += format_number(x);
    return *this;
  }
  Row& operator<<(const std::string& s) {
    sep();
    line_ += s;
    return *this;
  }
  void end() {
    line_ += '\n';
    out_ << line_;
    line_.clear();
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) line_ += ',';
    first_ = false;
  }
  std::ostream& out_;
  std::string line_;
  bool first_ = true;
};

std::vector<std::size_t> sampled_rows(std::size_t count, std::size_t stride) {
  std::vector<std::size_t> rows;
  if (count == 0) return rows;
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t k = 0; k < count; k += stride) rows.push_back(k);
  if (rows.back() != count - 1) rows.push_back(count - 1);
  return rows;
}

std::string idx(const char* name, Eigen::Index i) { return name + std::string("_") + std::to_string(i); }

// U is stored [u_r, u_l] per robot.
double left(const sim::Vec& U, Eigen::Index i) { return U(2 * i + 1); }
double right(const sim::Vec& U, Eigen::Index i) { return U(2 * i); }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> trace_columns(Eigen::Index robots) {
  std::vector<std::string> cols{"t"};
  for (Eigen::Index i = 0; i < robots; ++i) {
    for (const char* name : {"x", "y", "theta", "xdot", "ydot", "thetadot", "e_norm", "Fce_x",
                             "Fce_y", "Fce_th", "Fci_x", "Fci_y", "Fci_th", "Ue_l", "Ue_r",
                             "Ui_l", "Ui_r", "slip"}) {
      cols.push_back(idx(name, i));
    }
  }
  for (const char* name : {"region_active", "proj_residual", "conflict_diag"}) cols.emplace_back(name);
  return cols;
}

void write_trace_csv(std::ostream& out, const sim::SimTrace& trace, std::size_t stride) {
  Row row(out);
  for (const auto& c : trace_columns(trace.robots)) row << c;
  row.end();
  for (const std::size_t k : sampled_rows(trace.records.size(), stride)) {
    const auto& r = trace.records[k];
    row << r.t;
    for (Eigen::Index i = 0; i < trace.robots; ++i) {
      for (int j = 0; j < 3; ++j) row << r.q(3 * i + j);
      for (int j = 0; j < 3; ++j) row << r.qdot(3 * i + j);
      row << r.e_norm(i);
      for (int j = 0; j < 3; ++j) row << r.Fce(3 * i + j);
      for (int j = 0; j < 3; ++j) row << r.Fci(3 * i + j);
      row << left(r.Ue, i) << right(r.Ue, i) << left(r.Ui, i) << right(r.Ui, i) << r.slip(i);
    }
    row << (r.region_active ? 1.0 : 0.0) << r.proj_residual << r.conflict;
    row.end();
  }
}

nlohmann::json summary_json(const sim::RunSummary& s, const sim::ScenarioConfig& config) {
  auto finite_or_null = [](double x) -> nlohmann::json {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
  };
  const auto topo = build_augmented_laplacian(config.adjacency, config.leader_links);
  nlohmann::json doc;
  doc["scenario"] = config.name;
  doc["alpha"] = config.gains.alpha;
  doc["beta"] = config.gains.beta;
  doc["dt"] = config.dt;
  doc["horizon"] = config.horizon;
  doc["region_enabled"] = config.region_enabled;
  doc["leader_mode"] = config.leader_mode == sim::LeaderMode::kPrescribed ? "prescribed" : "dynamic";
  doc["force_mode"] = config.force_mode == sim::ForceMode::kIdeal ? "ideal" : "actuated";
  doc["gain_ratio"] = config.gains.alpha * config.gains.alpha / config.gains.beta;
  doc["gain_threshold"] = gain_threshold(topo);
  doc["gain_condition"] = s.gain_condition;
  doc["max_error"] = finite_or_null(s.max_error);
  doc["final_error"] = finite_or_null(s.final_error);
  doc["settling_epsilon"] = s.settling_epsilon;
  doc["settling_time"] = s.settling_time ? nlohmann::json(*s.settling_time) : nlohmann::json(nullptr);
  doc["violation_steps"] = s.violation_steps;
  doc["max_penetration"] = finite_or_null(s.max_penetration);
  doc["peak_torque_equality"] = finite_or_null(s.peak_torque_equality);
  doc["peak_torque_inequality"] = finite_or_null(s.peak_torque_inequality);
  doc["energy"] = finite_or_null(s.energy);
  doc["region_active_steps"] = s.region_active_steps;
  doc["max_conflict"] = finite_or_null(s.max_conflict);
  doc["halted"] = s.halted;
  doc["halt_reason"] = s.halt_reason;
  doc["end_time"] = s.end_time;
  return doc;
}

std::vector<std::string> write_figures(const std::filesystem::path& dir, const sim::SimTrace& trace,
                                       bool region_enabled, std::size_t stride) {
  const std::string traj = region_enabled ? "fig6_trajectories.csv" : "fig3_trajectories.csv";
  const std::string errs = region_enabled ? "fig7_errors.csv" : "fig4_errors.csv";
  const std::string torq = region_enabled ? "fig8_torques.csv" : "fig5_torques.csv";
  const auto rows = sampled_rows(trace.records.size(), stride);
  const Eigen::Index k = trace.robots;

  {
    auto out = open_output(dir / traj);
    Row row(out);
    row << std::string("t");
    for (Eigen::Index i = 0; i < k; ++i) row << idx("x", i) << idx("y", i);
    row.end();
    for (const auto r : rows) {
      const auto& rec = trace.records[r];
      row << rec.t;
      for (Eigen::Index i = 0; i < k; ++i) row << rec.q(3 * i) << rec.q(3 * i + 1);
      row.end();
    }
  }
  {
    auto out = open_output(dir / errs);
    Row row(out);
    row << std::string("t");
    for (Eigen::Index i = 1; i < k; ++i) row << idx("e_norm", i);
    row.end();
    for (const auto r : rows) {
      const auto& rec = trace.records[r];
      row << rec.t;
      for (Eigen::Index i = 1; i < k; ++i) row << rec.e_norm(i);
      row.end();
    }
  }
  {
    auto out = open_output(dir / torq);
    Row row(out);
    row << std::string("t");
    for (Eigen::Index i = 1; i < k; ++i) {
      row << idx("Ue_l", i) << idx("Ue_r", i);
      if (region_enabled) row << idx("Ui_l", i) << idx("Ui_r", i);
    }
    row.end();
    for (const auto r : rows) {
      const auto& rec = trace.records[r];
      row << rec.t;
      for (Eigen::Index i = 1; i < k; ++i) {
        row << left(rec.Ue, i) << right(rec.Ue, i);
        if (region_enabled) row << left(rec.Ui, i) << right(rec.Ui, i);
      }
      row.end();
    }
  }
  return {traj, errs, torq};
}

void write_run(const std::filesystem::path& dir, const sim::RunResult& result,
               const sim::ScenarioConfig& config, std::size_t stride) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "trace.csv");
    write_trace_csv(out, result.trace, stride);
  }
  {
    auto out = open_output(dir / "summary.json");
    out << summary_json(result.summary, config).dump(2) << '\n';
  }
  write_figures(dir, result.trace, config.region_enabled, stride);
}

void write_sweep_errors(const std::filesystem::path& file, const std::vector<SweepSeries>& series,
                        std::size_t stride) {
  auto out = open_output(file);
  Row row(out);
  row << std::string("t");
  std::size_t count = std::numeric_limits<std::size_t>::max();
  for (const auto& s : series) {
    for (Eigen::Index i = 1; i < s.trace->robots; ++i) row << s.label + "_" + idx("e_norm", i);
    row << s.label + "_total";
    count = std::min(count, s.trace->records.size());
  }
  row.end();
  if (series.empty()) return;
  for (const auto r : sampled_rows(count, stride)) {
    row << series.front().trace->records[r].t;
    for (const auto& s : series) {
      const auto& rec = s.trace->records[r];
      for (Eigen::Index i = 1; i < s.trace->robots; ++i) row << rec.e_norm(i);
      row << sim::total_error(rec);
    }
    row.end();
  }
}

}  // namespace guk::io
