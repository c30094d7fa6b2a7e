#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "guk/formation.hpp"
#include "guk/scenario.hpp"
#include "support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

guk::FormationTrajectory<double> experiment_formation() {
  guk::CircleFormation<double> c;
  c.angular_rate = 0.6;
  c.phases = {0.0, kPi / 2, kPi, 3 * kPi / 2};
  return {4, c, 470.0};
}

guk::AugmentedTopology<double> experiment_topology() {
  const auto g = guk::testing::experiment_graph();
  return guk::build_augmented_laplacian<double>(g.adjacency, g.leader_links);
}

// R(t) typed in from its definition.
double radius_oracle(double t) {
  if (t <= 300) return 4 + 2 * std::cos(2 * kPi * t / 500);
  return 4 + 2 * std::cos(6 * kPi / 5) + 2 * std::sin(kPi * (t - 300) / 300);
}

}  // namespace

TEST(Formation, RadiusSchedule) {
  const guk::PiecewiseRadius<double> r;
  EXPECT_DOUBLE_EQ(guk::evaluate_radius(r, 0.0).r, 6.0);
  const double left = 4 + 2 * std::cos(2 * kPi * 300 / 500);
  EXPECT_NEAR(left, 4 + 2 * std::cos(6 * kPi / 5), 1e-14);
  EXPECT_NEAR(guk::evaluate_radius(r, 300.0).r, left, 1e-14);
  EXPECT_NEAR(guk::evaluate_radius(r, 300.0 + 1e-9).r, left, 1e-8);
  for (double t : {0.0, 17.3, 150.0, 299.0, 300.0, 301.0, 420.5, 470.0}) {
    EXPECT_NEAR(guk::evaluate_radius(r, t).r, radius_oracle(t), 1e-13) << t;
  }
  const double h = 1e-4;
  for (double t : {10.0, 120.0, 299.0, 301.0, 460.0}) {
    const auto s = guk::evaluate_radius(r, t);
    EXPECT_NEAR(s.rdot, (radius_oracle(t + h) - radius_oracle(t - h)) / (2 * h), 1e-7) << t;
    EXPECT_NEAR(s.rddot, (radius_oracle(t + h) - 2 * radius_oracle(t) + radius_oracle(t - h)) / (h * h), 1e-5) << t;
  }
  // Right limits at the breakpoint.
  const auto at = guk::evaluate_radius(r, 300.0);
  EXPECT_NEAR(at.rdot, 2 * kPi / 300, 1e-14);
  EXPECT_NEAR(at.rddot, 0.0, 1e-14);
}

TEST(Formation, CircleTargets) {
  const auto traj = experiment_formation();
  const auto t0 = guk::formation_targets(0.0, traj);
  EXPECT_LE((t0.h.segment<3>(3) - Eigen::Vector3d(0, 6, 0)).norm(), 1e-14);
  for (double t : {0.0, 55.5, 300.0, 470.0}) {
    const auto s = guk::formation_targets(t, traj);
    EXPECT_EQ(s.h.head<3>(), Eigen::Vector3d::Zero());
    EXPECT_EQ(s.hdot.head<3>(), Eigen::Vector3d::Zero());
    EXPECT_EQ(s.hddot.head<3>(), Eigen::Vector3d::Zero());
    for (int i = 1; i <= 4; ++i) {
      const double p = 0.6 * t + (i - 1) * kPi / 2;
      const Eigen::Vector3d expected(radius_oracle(t) * std::sin(p), radius_oracle(t) * std::cos(p), p);
      EXPECT_LE((s.h.segment<3>(3 * i) - expected).norm(), 1e-12);
    }
  }
  const double h = 1e-4;
  for (double t : {5.0, 250.0, 350.0}) {
    const auto s = guk::formation_targets(t, traj);
    const auto p = guk::formation_targets(t + h, traj);
    const auto m = guk::formation_targets(t - h, traj);
    EXPECT_LE((s.hdot - (p.h - m.h) / (2 * h)).norm(), 1e-6);
    EXPECT_LE((s.hddot - (p.h - 2 * s.h + m.h) / (h * h)).norm(), 1e-4);
  }
  EXPECT_THROW(guk::formation_targets(-0.1, traj), guk::InvalidInput);
  EXPECT_THROW(guk::formation_targets(470.5, traj), guk::InvalidInput);
}

TEST(Formation, SampledTargetsInterpolate) {
  guk::SampledFormation<double> table;
  table.times = {0.0, 1.0, 3.0};
  table.h = MatrixXd::Zero(6, 3);
  table.h.row(3) << 0.0, 2.0, 6.0;
  table.hdot = MatrixXd::Constant(6, 3, 1.0);
  table.hddot = MatrixXd::Zero(6, 3);
  const guk::FormationTrajectory<double> traj{1, table, 3.0};
  EXPECT_DOUBLE_EQ(guk::formation_targets(0.5, traj).h(3), 1.0);
  EXPECT_DOUBLE_EQ(guk::formation_targets(2.0, traj).h(3), 4.0);
  EXPECT_DOUBLE_EQ(guk::formation_targets(3.0, traj).h(3), 6.0);
  EXPECT_THROW(guk::formation_targets(2.0, guk::FormationTrajectory<double>{2, table, 3.0}), guk::InvalidInput);
}

TEST(Formation, LeaderTrajectory) {
  const guk::LeaderTrajectory<double> leader;
  for (double t : {0.0, 75.0, 150.0, 222.2, 470.0}) {
    const auto s = guk::evaluate_leader(leader, t);
    EXPECT_LE((s.q - Eigen::Vector3d(0.1 * t, 3 * std::sin(2 * kPi * t / 300), 0)).norm(), 1e-14);
    const double h = 1e-4;
    const auto p = guk::evaluate_leader(leader, t + h);
    const auto m = guk::evaluate_leader(leader, t - h);
    EXPECT_LE((s.qdot - (p.q - m.q) / (2 * h)).norm(), 1e-8);
    EXPECT_LE((s.qddot - (p.q - 2 * s.q + m.q) / (h * h)).norm(), 1e-5);
  }
}

TEST(Formation, ErrorKernel) {
  const auto topo = experiment_topology();
  const VectorXd h = VectorXd::Random(15);
  EXPECT_LE(guk::formation_error(h, h, topo).norm(), 1e-15);
  const Eigen::Vector3d c(1.5, -2.0, 0.3);
  EXPECT_LE(guk::formation_error(VectorXd(h + c.replicate(5, 1)), h, topo).norm(), 1e-13);
  const VectorXd e = guk::formation_error(VectorXd(VectorXd::Random(15)), h, topo);
  EXPECT_EQ(e.head<3>(), Eigen::Vector3d::Zero());
  EXPECT_THROW(guk::formation_error(VectorXd(VectorXd::Zero(12)), h, topo), guk::InvalidInput);
}

TEST(Formation, InitialErrorIsNonzero) {
  const auto config = guk::scenario::paper_preset();
  const auto topo = experiment_topology();
  VectorXd q(15);
  for (int i = 0; i < 5; ++i) q.segment<3>(3 * i) = config.initial_states[static_cast<std::size_t>(i)].q;
  const VectorXd h = guk::formation_targets(0.0, experiment_formation()).h;
  // Follower 1 listens to the leader (0.8) and follower 4 (0.5).
  const Eigen::Vector3d e1 = 1.3 * (q.segment<3>(3) - h.segment<3>(3)) - 0.8 * q.head<3>() -
                             0.5 * (q.segment<3>(12) - h.segment<3>(12));
  const VectorXd e = guk::formation_error(q, h, topo);
  EXPECT_LE((e.segment<3>(3) - e1).norm(), 1e-12);
  EXPECT_GT(e.norm(), 1.0);
}

TEST(Formation, ClosedLoopSatisfiesBaumgarteModifiedConstraint) {
  std::mt19937_64 rng(51);
  const auto topo = experiment_topology();
  const auto traj = experiment_formation();
  const guk::ControlGains<double> gains{4.0, 0.5};
  const std::vector<guk::RobotParams<double>> params(5, guk::RobotParams<double>{});
  const MatrixXd shaped = guk::kron_i3((topo.augmented_laplacian + MatrixXd::Identity(5, 5)).eval());
  const MatrixXd A = guk::kron_i3(topo.augmented_laplacian);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = std::uniform_real_distribution<double>(0.0, 470.0)(rng);
    const auto state = guk::testing::random_state(rng, 5, t);
    const auto sys = guk::stacked_system(state, std::span<const guk::RobotParams<double>>(params));
    const auto targets = guk::formation_targets(t, traj);
    const VectorXd fce = guk::formation_equality_force(state.q, state.qdot, targets, topo, gains, sys.M, sys.F);
    const VectorXd qdd = sys.M.lu().solve(sys.F + fce);
    const VectorXd e = A * (state.q - targets.h);
    const VectorXd edot = A * (state.qdot - targets.hdot);
    const VectorXd rhs = A * targets.hddot - shaped * (gains.alpha * edot + gains.beta * e);
    EXPECT_LE((A * qdd - rhs).norm(), 1e-8 * (1 + rhs.norm())) << "trial " << trial;
  }
}

TEST(Formation, ExpandedAndPseudoinverseFormsAgree) {
  std::mt19937_64 rng(52);
  const auto topo = experiment_topology();
  const auto traj = experiment_formation();
  const std::vector<guk::RobotParams<double>> params(5, guk::RobotParams<double>{});
  for (int trial = 0; trial < 200; ++trial) {
    const guk::ControlGains<double> gains{0.5 + trial % 5, 0.25 + 0.5 * (trial % 4)};
    const double t = std::uniform_real_distribution<double>(0.0, 470.0)(rng);
    const auto state = guk::testing::random_state(rng, 5, t);
    const auto sys = guk::stacked_system(state, std::span<const guk::RobotParams<double>>(params));
    const auto targets = guk::formation_targets(t, traj);
    const VectorXd expanded = guk::formation_equality_force(state.q, state.qdot, targets, topo, gains, sys.M, sys.F);
    const VectorXd pinv = guk::formation_equality_force_pinv(state.q, state.qdot, targets, topo, gains, sys.M, sys.F);
    EXPECT_LE((expanded - pinv).norm(), 1e-9 * expanded.norm()) << "trial " << trial;
  }
}

TEST(Formation, OnManifoldTracksFormationAcceleration) {
  const auto topo = experiment_topology();
  const auto traj = experiment_formation();
  const auto targets = guk::formation_targets(12.0, traj);
  const Eigen::Vector3d c(3.0, -1.0, 0.2);
  const VectorXd q = targets.h + c.replicate(5, 1);
  const std::vector<guk::RobotParams<double>> params(5, guk::RobotParams<double>{});
  const guk::StackedState<double> state{q, targets.hdot, 12.0};
  const auto sys = guk::stacked_system(state, std::span<const guk::RobotParams<double>>(params));
  const VectorXd F = sys.M * targets.hddot;
  const VectorXd fce = guk::formation_equality_force(q, targets.hdot, targets, topo, guk::ControlGains<double>{}, sys.M, F);
  EXPECT_LE(fce.norm(), 1e-12);
  const MatrixXd A = guk::kron_i3(topo.augmented_laplacian);
  EXPECT_LE((A * sys.M.lu().solve(F + fce) - A * targets.hddot).norm(), 1e-10);
}

TEST(Formation, WheelTorques) {
  VectorXd fc = VectorXd::Zero(9);
  fc.segment<3>(0) << 1, 0, 0;
  fc.segment<3>(3) << 0.3, -0.2, 0;
  fc.segment<3>(6) << 0, 0, 1;
  const auto w = guk::wheel_torques(fc);
  EXPECT_LE((w.U.segment<2>(0) - Eigen::Vector2d(0.5, 0.5)).norm(), 1e-15);
  EXPECT_LE((w.U.segment<2>(2) - Eigen::Vector2d(0.05, 0.25)).norm(), 1e-15);
  EXPECT_LE(w.U.segment<2>(4).norm(), 1e-15);
  EXPECT_NEAR(w.projection_residual, 1.0, 1e-15);
  fc(8) = 0.0;
  EXPECT_NEAR(guk::wheel_torques(fc).projection_residual, 0.0, 1e-15);
  EXPECT_THROW(guk::wheel_torques(VectorXd(VectorXd::Zero(4))), guk::InvalidInput);
}
