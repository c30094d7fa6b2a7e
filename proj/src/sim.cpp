#include "guk/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace guk::sim {
namespace {

template <typename Derived>
bool same_matrix(const Eigen::MatrixBase<Derived>& a, const Eigen::MatrixBase<Derived>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw InvalidInput(field + ": " + what);
}

}  // namespace

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  const bool formation_equal = [&] {
    if (formation.index() != o.formation.index()) return false;
    if (const auto* c = std::get_if<CircleFormation<double>>(&formation)) {
      return *c == std::get<CircleFormation<double>>(o.formation);
    }
    const auto& a = std::get<SampledFormation<double>>(formation);
    const auto& b = std::get<SampledFormation<double>>(o.formation);
    return a.times == b.times && same_matrix(a.h, b.h) && same_matrix(a.hdot, b.hdot) &&
           same_matrix(a.hddot, b.hddot);
  }();
  return name == o.name && same_matrix(adjacency, o.adjacency) &&
         same_matrix(leader_links, o.leader_links) && robots == o.robots &&
         initial_states == o.initial_states && gains == o.gains && formation_equal &&
         formation_table_path == o.formation_table_path && leader == o.leader &&
         region == o.region && region_enabled == o.region_enabled && horizon == o.horizon &&
         dt == o.dt && leader_mode == o.leader_mode && force_mode == o.force_mode &&
         seed == o.seed;
}

void validate(const ScenarioConfig& c) {
  const Eigen::Index n = c.followers();
  if (n == 0) fail("topology.adjacency", "at least one follower is required");
  try {
    build_augmented_laplacian(c.adjacency, c.leader_links);
  } catch (const InvalidInput& e) {
    fail("topology", e.what());
  }
  if (static_cast<Eigen::Index>(c.robots.size()) != n + 1) {
    fail("robots.params", "expected " + std::to_string(n + 1) + " entries (leader first)");
  }
  for (std::size_t i = 0; i < c.robots.size(); ++i) {
    if (!c.robots[i].valid()) {
      fail("robots.params[" + std::to_string(i) + "]", "m, J, l, d must be positive and finite");
    }
  }
  if (static_cast<Eigen::Index>(c.initial_states.size()) != n + 1) {
    fail("robots.initial_states", "expected " + std::to_string(n + 1) + " entries (leader first)");
  }
  for (std::size_t i = 0; i < c.initial_states.size(); ++i) {
    if (!c.initial_states[i].q.allFinite() || !c.initial_states[i].qdot.allFinite()) {
      fail("robots.initial_states[" + std::to_string(i) + "]", "non-finite entry");
    }
  }
  if (!(c.gains.alpha > 0.0) || !(c.gains.beta > 0.0)) fail("gains", "alpha and beta must be > 0");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) fail("simulation.dt", "must be > 0");
  if (!(c.horizon >= 0.0) || !std::isfinite(c.horizon)) fail("simulation.horizon", "must be >= 0");
  if (c.horizon > 0.0 && c.horizon < c.dt) fail("simulation.horizon", "must be >= dt");

  if (const auto* circle = std::get_if<CircleFormation<double>>(&c.formation)) {
    if (static_cast<Eigen::Index>(circle->phases.size()) != n) {
      fail("formation.phases", "expected one phase per follower");
    }
    if (const auto* pr = std::get_if<PiecewiseRadius<double>>(&circle->radius)) {
      if (!(pr->period1 > 0.0) || !(pr->half_period2 > 0.0)) {
        fail("formation.radius", "periods must be > 0");
      }
    }
  } else {
    const auto& table = std::get<SampledFormation<double>>(c.formation);
    const Eigen::Index dim = 3 * (n + 1);
    if (table.times.empty()) fail("formation.table", "no samples");
    if (table.h.rows() != dim) fail("formation.table", "expected 3(n+1) coordinates per sample");
    if (!std::is_sorted(table.times.begin(), table.times.end()) ||
        std::adjacent_find(table.times.begin(), table.times.end()) != table.times.end()) {
      fail("formation.table", "times must be strictly increasing");
    }
    if (table.times.front() > 0.0 || table.times.back() < c.horizon) {
      fail("formation.table", "table must cover [0, horizon]");
    }
  }
  if (!(c.leader.y_period > 0.0)) fail("leader.y_period", "must be > 0");

  try {
    c.region.validate();
  } catch (const InvalidInput& e) {
    fail("region", e.what());
  }
  if (c.region_enabled) {
    for (std::size_t i = 0; i < c.initial_states.size(); ++i) {
      const auto& q = c.initial_states[i].q;
      if (!c.region.outer.contains_open(q(0), q(1))) {
        fail("robots.initial_states[" + std::to_string(i) + "]",
             "initial position must be strictly inside the outer region");
      }
    }
  }
}

ClosedLoop::ClosedLoop(const ScenarioConfig& config) : config_(config) {
  validate(config_);
  topo_ = build_augmented_laplacian(config_.adjacency, config_.leader_links);
  formation_.followers = config_.followers();
  formation_.family = config_.formation;
  formation_.horizon = config_.horizon;
}

StackedState<double> ClosedLoop::initial_state() const {
  const Eigen::Index k = topo_.size();
  StackedState<double> s{Vec(3 * k), Vec(3 * k), 0.0};
  for (Eigen::Index i = 0; i < k; ++i) {
    s.q.segment<3>(3 * i) = config_.initial_states[static_cast<std::size_t>(i)].q;
    s.qdot.segment<3>(3 * i) = config_.initial_states[static_cast<std::size_t>(i)].qdot;
  }
  if (config_.leader_mode == LeaderMode::kPrescribed) {
    const auto leader = evaluate_leader(config_.leader, 0.0);
    s.q.head<3>() = leader.q;
    s.qdot.head<3>() = leader.qdot;
  }
  return s;
}

ControlEval ClosedLoop::evaluate(const StackedState<double>& state, bool previously_active) const {
  const Eigen::Index k = topo_.size();
  const bool prescribed = config_.leader_mode == LeaderMode::kPrescribed;
  const auto sys = stacked_system(state, std::span<const RobotParams<double>>(config_.robots));
  const Eigen::PartialPivLU<Mat> lu(sys.M);
  const Vec a = lu.solve(sys.F);

  const auto targets = formation_targets(state.t, formation_);
  Vec correction =
      formation_acceleration_correction(state.q, state.qdot, targets, topo_, config_.gains, a);
  LeaderSample<double> leader;
  if (prescribed) {
    // Common shift in N(L̄⊗I3) onto the leader trajectory.
    leader = evaluate_leader(config_.leader, state.t);
    const Vec3<double> delta = leader.qddot - (a + correction).head<3>();
    correction += delta.replicate(k, 1);
  }
  const Vec accel_eq = a + correction;

  ControlEval out;
  out.Fce = sys.M * correction;
  out.Fci = Vec::Zero(3 * k);
  Vec shift = Vec::Zero(3 * k);
  if (config_.region_enabled) {
    out.region_active = region_active(state.q, config_.region, previously_active);
    if (out.region_active) {
      auto terms = inequality_terms(state.q, state.qdot, accel_eq, config_.region);
      if (prescribed) {
        // Leader rows out of the fit.
        terms.p1.head<2>().setZero();
        terms.p2.topRows(2).setZero();
        terms.xi.head<2>().setZero();
        terms.xidot.head<2>().setZero();
      }
      const auto rs = r_star(terms, true, config_.region);
      shift = block_mean_replicate(rs.r);
      out.Fci = sys.M * shift;
      out.conflict = rs.conflict;
      out.p2_rank = rs.rank;
    } else {
      diffeo(state.q, config_.region);  // domain check
    }
  }

  if (config_.force_mode == ForceMode::kIdeal) {
    out.qddot = accel_eq + shift;
  } else {
    static const InputMap<double> map = input_map<double>();
    Vec fc = out.Fce + out.Fci;
    for (Eigen::Index i = 0; i < k; ++i) {
      fc.segment<3>(3 * i) = map.P * (map.P_pinv * fc.segment<3>(3 * i));
    }
    out.qddot = lu.solve(sys.F + fc);
  }
  if (prescribed) out.qddot.head<3>() = leader.qddot;
  return out;
}

namespace {

StackedState<double> rk4(const ClosedLoop& loop, const StackedState<double>& s, double dt,
                         bool previously_active, const Vec& k1_acc) {
  auto advance = [&](const Vec& dq, const Vec& dv, double h) {
    return StackedState<double>{s.q + h * dq, s.qdot + h * dv, s.t + h};
  };
  const Vec& k1_q = s.qdot;
  const auto s2 = advance(k1_q, k1_acc, 0.5 * dt);
  const Vec k2_acc = loop.evaluate(s2, previously_active).qddot;
  const Vec k2_q = s2.qdot;
  const auto s3 = advance(k2_q, k2_acc, 0.5 * dt);
  const Vec k3_acc = loop.evaluate(s3, previously_active).qddot;
  const Vec k3_q = s3.qdot;
  const auto s4 = advance(k3_q, k3_acc, dt);
  const Vec k4_acc = loop.evaluate(s4, previously_active).qddot;
  const Vec k4_q = s4.qdot;

  StackedState<double> next;
  next.q = s.q + dt / 6.0 * (k1_q + 2.0 * k2_q + 2.0 * k3_q + k4_q);
  next.qdot = s.qdot + dt / 6.0 * (k1_acc + 2.0 * k2_acc + 2.0 * k3_acc + k4_acc);
  next.t = s.t + dt;
  if (loop.config().leader_mode == LeaderMode::kPrescribed) {
    const auto leader = evaluate_leader(loop.config().leader, next.t);
    next.q.head<3>() = leader.q;
    next.qdot.head<3>() = leader.qdot;
  }
  if (!next.q.allFinite() || !next.qdot.allFinite()) {
    throw NumericalError("integration produced a non-finite state at t = " +
                         std::to_string(next.t));
  }
  return next;
}

double max_abs_xi(const Vec& q, const RegionSpec<double>& region) {
  for (Eigen::Index i = 0; i < q.size() / 3; ++i) {
    if (!region.outer.contains_open(q(3 * i), q(3 * i + 1))) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return diffeo(q, region).cwiseAbs().maxCoeff();
}

StepRecord make_record(const ClosedLoop& loop, const StackedState<double>& s,
                       const ControlEval& eval) {
  const auto& topo = loop.topology();
  const Eigen::Index k = topo.size();
  const auto targets = formation_targets(s.t, loop.formation());
  StepRecord r;
  r.t = s.t;
  r.q = s.q;
  r.qdot = s.qdot;
  r.e = formation_error(s.q, targets.h, topo);
  r.e_norm.resize(k);
  r.slip.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    r.e_norm(i) = r.e.segment<3>(3 * i).norm();
    r.slip(i) = nonholonomic_slip<double>(s.q.segment<3>(3 * i), s.qdot.segment<3>(3 * i));
  }
  r.Fce = eval.Fce;
  r.Fci = eval.Fci;
  r.Ue = wheel_torques(eval.Fce).U;
  r.Ui = wheel_torques(eval.Fci).U;
  r.proj_residual = wheel_torques(Vec(eval.Fce + eval.Fci)).projection_residual;
  r.region_active = eval.region_active;
  r.conflict = eval.conflict;
  r.xi_max = max_abs_xi(s.q, loop.config().region);
  return r;
}

}  // namespace

StackedState<double> ClosedLoop::step(const StackedState<double>& state, double dt,
                                      bool previously_active) const {
  return rk4(*this, state, dt, previously_active, evaluate(state, previously_active).qddot);
}

double total_error(const StepRecord& r) { return r.e_norm.sum(); }

std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& err,
                                    double epsilon) {
  if (t.empty()) return std::nullopt;
  std::size_t first_ok = t.size();
  for (std::size_t i = t.size(); i-- > 0;) {
    if (!(err[i] < epsilon)) break;
    first_ok = i;
  }
  if (first_ok == t.size()) return std::nullopt;
  return t[first_ok];
}

RunSummary compute_metrics(const SimTrace& trace, const ScenarioConfig& config, double epsilon) {
  RunSummary s;
  s.settling_epsilon = epsilon;
  if (trace.records.empty()) return s;
  std::vector<double> t, err;
  t.reserve(trace.records.size());
  err.reserve(trace.records.size());
  double prev_power = 0.0;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    const double e = total_error(r);
    t.push_back(r.t);
    err.push_back(e);
    s.max_error = std::max(s.max_error, e);
    bool violated = false;
    for (Eigen::Index i = 0; i < r.q.size() / 3; ++i) {
      const double x = r.q(3 * i);
      const double y = r.q(3 * i + 1);
      if (!config.region.outer.contains_open(x, y)) violated = true;
      s.max_penetration = std::max(s.max_penetration, config.region.outer.penetration(x, y));
    }
    if (violated) ++s.violation_steps;
    s.peak_torque_equality = std::max(s.peak_torque_equality, r.Ue.cwiseAbs().maxCoeff());
    s.peak_torque_inequality = std::max(s.peak_torque_inequality, r.Ui.cwiseAbs().maxCoeff());
    const double power = (r.Ue + r.Ui).squaredNorm();
    if (k > 0) s.energy += 0.5 * (power + prev_power) * (r.t - trace.records[k - 1].t);
    prev_power = power;
    if (r.region_active) ++s.region_active_steps;
    s.max_conflict = std::max(s.max_conflict, r.conflict);
  }
  s.final_error = err.back();
  s.settling_time = settling_time(t, err, epsilon);
  s.end_time = t.back();
  const auto topo = build_augmented_laplacian(config.adjacency, config.leader_links);
  s.gain_condition = check_gains(config.gains.alpha, config.gains.beta, topo);
  return s;
}

RunResult run(const ScenarioConfig& config) {
  const ClosedLoop loop(config);
  RunResult result;
  result.trace.robots = loop.topology().size();
  const auto steps = static_cast<std::size_t>(std::floor(config.horizon / config.dt + 1e-9));
  result.trace.records.reserve(steps + 1);

  auto state = loop.initial_state();
  bool active = false;
  std::string halt;
  for (std::size_t k = 0;; ++k) {
    state.t = static_cast<double>(k) * config.dt;
    try {
      const ControlEval eval = loop.evaluate(state, active);
      result.trace.records.push_back(make_record(loop, state, eval));
      if (k == steps) break;
      active = eval.region_active;
      state = rk4(loop, state, config.dt, active, eval.qddot);
    } catch (const DomainViolation& e) {
      halt = std::string("region domain violation: ") + e.what();
      break;
    } catch (const NumericalError& e) {
      halt = std::string("numerical failure: ") + e.what();
      break;
    }
  }
  result.summary = compute_metrics(result.trace, config);
  if (!halt.empty()) {
    result.summary.halted = true;
    result.summary.halt_reason = halt;
  }
  return result;
}

}  // namespace guk::sim
