#pragma once

// Closed-loop integration of the stacked leader + followers system.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "guk/formation.hpp"
#include "guk/region.hpp"
#include "guk/robot_model.hpp"
#include "guk/topology.hpp"

namespace guk::sim {

using Vec = VecX<double>;
using Mat = MatX<double>;

enum class LeaderMode { kPrescribed, kDynamic };
enum class ForceMode { kIdeal, kActuated };

struct ScenarioConfig {
  std::string name = "custom";
  Mat adjacency;                        // n x n
  Vec leader_links;                     // n
  std::vector<RobotParams<double>> robots;        // n + 1, leader first
  std::vector<RobotState<double>> initial_states; // n + 1
  ControlGains<double> gains;
  std::variant<CircleFormation<double>, SampledFormation<double>> formation;
  std::string formation_table_path;     // non-empty when the formation came from a table file
  LeaderTrajectory<double> leader;
  RegionSpec<double> region;
  bool region_enabled = false;
  double horizon = 470.0;
  double dt = 0.01;
  LeaderMode leader_mode = LeaderMode::kPrescribed;
  ForceMode force_mode = ForceMode::kIdeal;
  std::uint64_t seed = 0;

  Eigen::Index followers() const { return adjacency.rows(); }
  bool operator==(const ScenarioConfig& o) const;
};

/// Throws InvalidInput with a message naming the offending field.
void validate(const ScenarioConfig& config);

/// Everything the controller produces at one (state, t).
struct ControlEval {
  Vec qddot;
  Vec Fce;   // equality channel (includes the leader-tracking shift in prescribed mode)
  Vec Fci;   // inequality channel M(Q⊗I3)r*
  bool region_active = false;
  double conflict = 0.0;
  Eigen::Index p2_rank = 0;
};

/// Per-run immutable context: config, L̄ and the formation trajectory.
class ClosedLoop {
 public:
  explicit ClosedLoop(const ScenarioConfig& config);

  const ScenarioConfig& config() const { return config_; }
  const AugmentedTopology<double>& topology() const { return topo_; }
  const FormationTrajectory<double>& formation() const { return formation_; }

  StackedState<double> initial_state() const;

  ControlEval evaluate(const StackedState<double>& state, bool previously_active = false) const;

  /// One RK4 step; in prescribed mode the leader block is reset to the analytic trajectory.
  StackedState<double> step(const StackedState<double>& state, double dt,
                            bool previously_active = false) const;

 private:
  ScenarioConfig config_;
  AugmentedTopology<double> topo_;
  FormationTrajectory<double> formation_;
};

inline Vec closed_loop_acceleration(const StackedState<double>& state, const ClosedLoop& loop) {
  return loop.evaluate(state).qddot;
}

struct StepRecord {
  double t = 0.0;
  Vec q, qdot;
  Vec e;                     // 3(n+1)
  Vec e_norm;                // n+1, leader entry 0
  Vec Fce, Fci;
  Vec Ue, Ui;                // 2(n+1), [u_r, u_l] per robot
  Vec slip;                  // n+1
  double xi_max = 0.0;       // max |ξ| over robots; +inf when any robot is not strictly inside
  bool region_active = false;
  double proj_residual = 0.0;
  double conflict = 0.0;
};

struct SimTrace {
  Eigen::Index robots = 0;
  std::vector<StepRecord> records;
};

struct RunSummary {
  double max_error = 0.0;     // max_t Σ_i ‖e_i‖
  double final_error = 0.0;
  std::optional<double> settling_time;   // empty when never settled within the trace
  double settling_epsilon = 1e-2;
  int violation_steps = 0;               // steps with some robot not strictly inside the outer rectangle
  double max_penetration = 0.0;          // m
  double peak_torque_equality = 0.0;
  double peak_torque_inequality = 0.0;
  double energy = 0.0;                   // ∫ ‖U‖² dt, trapezoid
  int region_active_steps = 0;
  double max_conflict = 0.0;
  bool gain_condition = true;
  bool halted = false;
  std::string halt_reason;
  double end_time = 0.0;
};

struct RunResult {
  SimTrace trace;
  RunSummary summary;
};

/// Σ_i ‖e_i‖ of one record.
double total_error(const StepRecord& r);

RunSummary compute_metrics(const SimTrace& trace, const ScenarioConfig& config,
                           double epsilon = 1e-2);

/// Settling time of an arbitrary error series on a uniform grid.
std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& err,
                                    double epsilon);

RunResult run(const ScenarioConfig& config);

}  // namespace guk::sim
