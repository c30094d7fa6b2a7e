#pragma once

// Time-varying formation tracking through the equality channel: desired offsets h(t),
// the formation error (L̄⊗I3)(q − h), and the closed-form formation force.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <variant>
#include <vector>

#include "guk/errors.hpp"
#include "guk/guk_core.hpp"
#include "guk/linalg.hpp"
#include "guk/robot_model.hpp"
#include "guk/topology.hpp"

namespace guk {

template <typename Scalar>
struct ControlGains {
  Scalar alpha = Scalar(4);
  Scalar beta = Scalar(0.5);
  bool operator==(const ControlGains&) const = default;
};

/// R(t) = base + amp1 cos(2πt/period1) up to t_break, then continues as
/// R(t_break) + amp2 sin(π(t − t_break)/half_period2). Derivatives at t_break are right limits.
template <typename Scalar>
struct PiecewiseRadius {
  Scalar base = Scalar(4);
  Scalar amp1 = Scalar(2);
  Scalar period1 = Scalar(500);
  Scalar t_break = Scalar(300);
  Scalar amp2 = Scalar(2);
  Scalar half_period2 = Scalar(300);
  bool operator==(const PiecewiseRadius&) const = default;
};

template <typename Scalar>
struct ConstantRadius {
  Scalar value = Scalar(5);
  bool operator==(const ConstantRadius&) const = default;
};

template <typename Scalar>
using RadiusSchedule = std::variant<PiecewiseRadius<Scalar>, ConstantRadius<Scalar>>;

template <typename Scalar>
struct RadiusSample {
  Scalar r, rdot, rddot;
};

template <typename Scalar>
RadiusSample<Scalar> evaluate_radius(const PiecewiseRadius<Scalar>& s, Scalar t) {
  using std::cos;
  using std::sin;
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar k1 = Scalar(2) * pi / s.period1;
  const Scalar r_break = s.base + s.amp1 * cos(k1 * s.t_break);
  const Scalar k2 = pi / s.half_period2;
  RadiusSample<Scalar> out;
  out.r = t <= s.t_break ? s.base + s.amp1 * cos(k1 * t)
                         : r_break + s.amp2 * sin(k2 * (t - s.t_break));
  if (t < s.t_break) {
    out.rdot = -s.amp1 * k1 * sin(k1 * t);
    out.rddot = -s.amp1 * k1 * k1 * cos(k1 * t);
  } else {
    out.rdot = s.amp2 * k2 * cos(k2 * (t - s.t_break));
    out.rddot = -s.amp2 * k2 * k2 * sin(k2 * (t - s.t_break));
  }
  return out;
}

template <typename Scalar>
RadiusSample<Scalar> evaluate_radius(const ConstantRadius<Scalar>& s, Scalar) {
  return {s.value, Scalar(0), Scalar(0)};
}

/// Follower i at [R sin(wt+φ_i), R cos(wt+φ_i), wt+φ_i]; the leader offset is zero.
template <typename Scalar>
struct CircleFormation {
  Scalar angular_rate = Scalar(0.6);
  std::vector<Scalar> phases;  // one per follower
  RadiusSchedule<Scalar> radius = PiecewiseRadius<Scalar>{};
  bool operator==(const CircleFormation&) const = default;
};

/// Tabulated offsets; columns are samples, rows the 3(n+1) stacked coordinates.
template <typename Scalar>
struct SampledFormation {
  std::vector<Scalar> times;
  MatX<Scalar> h, hdot, hddot;
  bool operator==(const SampledFormation& o) const {
    auto same = [](const MatX<Scalar>& a, const MatX<Scalar>& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return times == o.times && same(h, o.h) && same(hdot, o.hdot) && same(hddot, o.hddot);
  }
};

template <typename Scalar>
struct FormationTrajectory {
  Eigen::Index followers = 0;
  std::variant<CircleFormation<Scalar>, SampledFormation<Scalar>> family;
  Scalar horizon = std::numeric_limits<Scalar>::infinity();
};

template <typename Scalar>
struct FormationTargets {
  VecX<Scalar> h, hdot, hddot;
};

/// Quarter-turn style phases (i−1)·2π/n.
template <typename Scalar>
std::vector<Scalar> evenly_spaced_phases(Eigen::Index followers) {
  std::vector<Scalar> phases;
  for (Eigen::Index i = 0; i < followers; ++i) {
    phases.push_back(Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(i) / Scalar(followers));
  }
  return phases;
}

namespace detail {

template <typename Scalar>
FormationTargets<Scalar> circle_targets(const CircleFormation<Scalar>& c, Eigen::Index followers,
                                        Scalar t) {
  using std::cos;
  using std::sin;
  if (static_cast<Eigen::Index>(c.phases.size()) != followers) {
    throw InvalidInput("formation: one phase per follower required");
  }
  const auto rs = std::visit([t](const auto& s) { return evaluate_radius(s, t); }, c.radius);
  const Eigen::Index dim = 3 * (followers + 1);
  FormationTargets<Scalar> out{VecX<Scalar>::Zero(dim), VecX<Scalar>::Zero(dim),
                               VecX<Scalar>::Zero(dim)};
  const Scalar w = c.angular_rate;
  for (Eigen::Index i = 0; i < followers; ++i) {
    const Scalar p = w * t + c.phases[static_cast<std::size_t>(i)];
    const Scalar s = sin(p);
    const Scalar co = cos(p);
    const Eigen::Index k = 3 * (i + 1);
    out.h.template segment<3>(k) << rs.r * s, rs.r * co, p;
    out.hdot.template segment<3>(k) << rs.rdot * s + rs.r * w * co, rs.rdot * co - rs.r * w * s, w;
    out.hddot.template segment<3>(k) << rs.rddot * s + Scalar(2) * rs.rdot * w * co - rs.r * w * w * s,
        rs.rddot * co - Scalar(2) * rs.rdot * w * s - rs.r * w * w * co, Scalar(0);
  }
  return out;
}

template <typename Scalar>
FormationTargets<Scalar> sampled_targets(const SampledFormation<Scalar>& f, Eigen::Index followers,
                                         Scalar t) {
  const Eigen::Index dim = 3 * (followers + 1);
  if (f.times.empty() || f.h.rows() != dim || f.hdot.rows() != dim || f.hddot.rows() != dim) {
    throw InvalidInput("formation table: row count must be 3(n+1)");
  }
  if (t < f.times.front() || t > f.times.back()) {
    throw InvalidInput("formation table: time outside the tabulated range");
  }
  if (f.times.size() == 1) return {f.h.col(0), f.hdot.col(0), f.hddot.col(0)};
  auto it = std::upper_bound(f.times.begin(), f.times.end(), t);
  std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - f.times.begin()),
                                         f.times.size() - 1);
  const std::size_t lo = hi - 1;
  const Scalar w = (t - f.times[lo]) / (f.times[hi] - f.times[lo]);
  const auto lerp = [&](const MatX<Scalar>& m) -> VecX<Scalar> {
    return (Scalar(1) - w) * m.col(static_cast<Eigen::Index>(lo)) +
           w * m.col(static_cast<Eigen::Index>(hi));
  };
  return {lerp(f.h), lerp(f.hdot), lerp(f.hddot)};
}

}  // namespace detail

template <typename Scalar>
FormationTargets<Scalar> formation_targets(Scalar t, const FormationTrajectory<Scalar>& traj) {
  const Scalar slack = Scalar(1e-9) * std::max(Scalar(1), std::abs(traj.horizon));
  if (!(t >= Scalar(0)) || t > traj.horizon + slack) {
    throw InvalidInput("formation_targets: time outside the simulation horizon");
  }
  return std::visit(
      [&](const auto& family) -> FormationTargets<Scalar> {
        using F = std::decay_t<decltype(family)>;
        if constexpr (std::is_same_v<F, CircleFormation<Scalar>>) {
          return detail::circle_targets(family, traj.followers, t);
        } else {
          return detail::sampled_targets(family, traj.followers, t);
        }
      },
      traj.family);
}

/// q0(t) = [vx t + x0, y_amplitude sin(2πt/y_period) + y0, heading].
template <typename Scalar>
struct LeaderTrajectory {
  Scalar vx = Scalar(0.1);
  Scalar y_amplitude = Scalar(3);
  Scalar y_period = Scalar(300);
  Scalar heading = Scalar(0);
  Scalar x0 = Scalar(0);
  Scalar y0 = Scalar(0);
  bool operator==(const LeaderTrajectory&) const = default;
};

template <typename Scalar>
struct LeaderSample {
  Vec3<Scalar> q, qdot, qddot;
};

template <typename Scalar>
LeaderSample<Scalar> evaluate_leader(const LeaderTrajectory<Scalar>& l, Scalar t) {
  using std::cos;
  using std::sin;
  const Scalar k = Scalar(2) * std::numbers::pi_v<Scalar> / l.y_period;
  LeaderSample<Scalar> s;
  s.q << l.x0 + l.vx * t, l.y0 + l.y_amplitude * sin(k * t), l.heading;
  s.qdot << l.vx, l.y_amplitude * k * cos(k * t), Scalar(0);
  s.qddot << Scalar(0), -l.y_amplitude * k * k * sin(k * t), Scalar(0);
  return s;
}

/// e = (L̄⊗I3)(q − h); the leader block is always zero.
template <typename Scalar>
VecX<Scalar> formation_error(const VecX<Scalar>& q, const VecX<Scalar>& h,
                             const AugmentedTopology<Scalar>& topo) {
  if (q.size() != 3 * topo.size() || h.size() != q.size()) {
    throw InvalidInput("formation_error: expected 3(n+1) entries");
  }
  return kron_i3_apply(topo.augmented_laplacian, q - h);
}

/// M⁻¹F^{c,e} in the η-expanded form:
///   [(I−Q)⊗I3](ḧ + y − a) + (L̄⊗I3) y − [(1ηᵀ)⊗I3] y / (n+1),   y = −α(q̇−ḣ) − β(q−h).
template <typename Scalar>
VecX<Scalar> formation_acceleration_correction(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                               const FormationTargets<Scalar>& targets,
                                               const AugmentedTopology<Scalar>& topo,
                                               const ControlGains<Scalar>& gains,
                                               const VecX<Scalar>& unconstrained_accel) {
  const Eigen::Index dim = 3 * topo.size();
  if (q.size() != dim || qdot.size() != dim || targets.h.size() != dim ||
      unconstrained_accel.size() != dim) {
    throw InvalidInput("formation force: expected 3(n+1) entries");
  }
  const VecX<Scalar> y = -gains.alpha * (qdot - targets.hdot) - gains.beta * (q - targets.h);
  const VecX<Scalar> x = targets.hddot + y - unconstrained_accel;

  Vec3<Scalar> eta_y = Vec3<Scalar>::Zero();
  for (Eigen::Index j = 0; j < topo.size(); ++j) {
    eta_y += topo.eta(j) * y.template segment<3>(3 * j);
  }
  eta_y /= Scalar(topo.size());

  return x - block_mean_replicate(x) + kron_i3_apply(topo.augmented_laplacian, y) -
         eta_y.replicate(topo.size(), 1);
}

template <typename Scalar>
VecX<Scalar> formation_equality_force(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                      const FormationTargets<Scalar>& targets,
                                      const AugmentedTopology<Scalar>& topo,
                                      const ControlGains<Scalar>& gains, const MatX<Scalar>& M,
                                      const VecX<Scalar>& F) {
  const VecX<Scalar> a = unconstrained_acceleration(M, F);
  return M * formation_acceleration_correction(q, qdot, targets, topo, gains, a);
}

/// The same constraint expressed generically: A = L̄⊗I3 and b from the Baumgarte-modified
/// formation constraint with gain shaping (L̄+I)⊗I3.
template <typename Scalar>
EqualityConstraint<Scalar> formation_constraint(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                                const FormationTargets<Scalar>& targets,
                                                const AugmentedTopology<Scalar>& topo,
                                                const ControlGains<Scalar>& gains) {
  const Eigen::Index k = topo.size();
  const auto& lbar = topo.augmented_laplacian;
  EqualityConstraint<Scalar> c;
  c.A = kron_i3(lbar);
  const VecX<Scalar> psi = kron_i3_apply(lbar, q - targets.h);
  const VecX<Scalar> psi_dot = kron_i3_apply(lbar, qdot - targets.hdot);
  const VecX<Scalar> kin = kron_i3_apply(lbar, targets.hddot);
  const MatX<Scalar> shaping = kron_i3((lbar + MatX<Scalar>::Identity(k, k)).eval());
  c.b = baumgarte_rhs(psi, psi_dot, kin, BaumgarteGains<Scalar>{gains.alpha, gains.beta}, shaping);
  return c;
}

/// Pseudoinverse form M (L̄⊗I3)⁺ {...}; used as an independent cross-check of the expanded form.
template <typename Scalar>
VecX<Scalar> formation_equality_force_pinv(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                           const FormationTargets<Scalar>& targets,
                                           const AugmentedTopology<Scalar>& topo,
                                           const ControlGains<Scalar>& gains,
                                           const MatX<Scalar>& M, const VecX<Scalar>& F) {
  return equality_force(M, F, formation_constraint(q, qdot, targets, topo, gains));
}

template <typename Scalar>
struct WheelTorques {
  VecX<Scalar> U;                 // [u_r0, u_l0, u_r1, u_l1, ...]
  Scalar projection_residual{};   // ‖(P P⁺ − I) F^c‖ over all robots
};

template <typename Scalar>
WheelTorques<Scalar> wheel_torques(const VecX<Scalar>& fc) {
  if (fc.size() % 3 != 0) throw InvalidInput("wheel_torques: length must be a multiple of 3");
  static const InputMap<Scalar> map = input_map<Scalar>();
  const Eigen::Index robots = fc.size() / 3;
  WheelTorques<Scalar> out{VecX<Scalar>(2 * robots), Scalar(0)};
  Scalar residual2 = Scalar(0);
  for (Eigen::Index i = 0; i < robots; ++i) {
    const Vec3<Scalar> fi = fc.template segment<3>(3 * i);
    const Eigen::Matrix<Scalar, 2, 1> ui = map.P_pinv * fi;
    out.U.template segment<2>(2 * i) = ui;
    residual2 += (map.P * ui - fi).squaredNorm();
  }
  out.projection_residual = std::sqrt(residual2);
  return out;
}

}  // namespace guk
