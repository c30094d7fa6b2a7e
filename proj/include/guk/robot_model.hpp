#pragma once

// Planar four-wheeled robot dynamics M(q) q̈ = F(q, q̇) + P U and the stacked
// leader + followers system.

#include <cmath>
#include <span>

#include "guk/errors.hpp"
#include "guk/linalg.hpp"

namespace guk {

template <typename Scalar>
struct RobotParams {
  Scalar mass = Scalar(1);            // m, kg
  Scalar inertia = Scalar(1);         // J, kg m^2
  Scalar half_track = Scalar(0.1);    // l, m
  Scalar wheel_radius = Scalar(0.05); // d, m

  bool valid() const {
    return mass > Scalar(0) && inertia > Scalar(0) && half_track > Scalar(0) &&
           wheel_radius > Scalar(0) && std::isfinite(mass) && std::isfinite(inertia) &&
           std::isfinite(half_track) && std::isfinite(wheel_radius);
  }
  bool operator==(const RobotParams&) const = default;
};

template <typename Scalar>
struct RobotState {
  Vec3<Scalar> q = Vec3<Scalar>::Zero();     // x, y, theta
  Vec3<Scalar> qdot = Vec3<Scalar>::Zero();  // xdot, ydot, thetadot
  bool operator==(const RobotState&) const = default;
};

template <typename Scalar>
struct StackedState {
  VecX<Scalar> q;     // [q_0; q_1; ...; q_n]
  VecX<Scalar> qdot;
  Scalar t = Scalar(0);

  Eigen::Index robots() const { return q.size() / 3; }
};

template <typename Scalar>
Mat3<Scalar> mass_matrix(const Vec3<Scalar>& q, const RobotParams<Scalar>& p) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(q(2));
  const Scalar s = sin(q(2));
  const Scalar md = p.mass * p.wheel_radius;
  Mat3<Scalar> m;
  m << md * c, md * s, Scalar(0),
       Scalar(0), Scalar(0), p.inertia * p.wheel_radius / p.half_track,
       s, -c, Scalar(0);
  return m;
}

template <typename Scalar>
Vec3<Scalar> drift_force(const Vec3<Scalar>& q, const Vec3<Scalar>& qdot,
                         const RobotParams<Scalar>& p) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(q(2));
  const Scalar s = sin(q(2));
  const Scalar md = p.mass * p.wheel_radius;
  const Scalar w = qdot(2);
  return {md * s * w * qdot(0) - md * c * w * qdot(1), Scalar(0),
          -c * w * qdot(0) - s * w * qdot(1)};
}

/// sinθ·ẋ − cosθ·ẏ; zero when the wheels do not slip sideways.
template <typename Scalar>
Scalar nonholonomic_slip(const Vec3<Scalar>& q, const Vec3<Scalar>& qdot) {
  using std::cos;
  using std::sin;
  return sin(q(2)) * qdot(0) - cos(q(2)) * qdot(1);
}

template <typename Scalar>
struct InputMap {
  Eigen::Matrix<Scalar, 3, 2> P;       // F^c = P [u_r; u_l]
  Eigen::Matrix<Scalar, 2, 3> P_pinv;
};

template <typename Scalar>
InputMap<Scalar> input_map() {
  InputMap<Scalar> map;
  map.P << Scalar(1), Scalar(1), Scalar(1), Scalar(-1), Scalar(0), Scalar(0);
  map.P_pinv = pseudo_inverse(map.P);
  return map;
}

template <typename Scalar>
struct StackedSystem {
  MatX<Scalar> M;  // block diagonal
  VecX<Scalar> F;
};

template <typename Scalar>
StackedSystem<Scalar> stacked_system(const StackedState<Scalar>& state,
                                     std::span<const RobotParams<Scalar>> params) {
  const Eigen::Index robots = static_cast<Eigen::Index>(params.size());
  if (robots == 0 || state.q.size() != 3 * robots || state.qdot.size() != 3 * robots) {
    throw InvalidInput("stacked_system: state length must be 3 * robot count");
  }
  StackedSystem<Scalar> sys;
  sys.M = MatX<Scalar>::Zero(3 * robots, 3 * robots);
  sys.F.resize(3 * robots);
  for (Eigen::Index i = 0; i < robots; ++i) {
    const Vec3<Scalar> qi = state.q.template segment<3>(3 * i);
    const Vec3<Scalar> vi = state.qdot.template segment<3>(3 * i);
    const auto& p = params[static_cast<std::size_t>(i)];
    sys.M.template block<3, 3>(3 * i, 3 * i) = mass_matrix(qi, p);
    sys.F.template segment<3>(3 * i) = drift_force(qi, vi, p);
  }
  return sys;
}

}  // namespace guk
