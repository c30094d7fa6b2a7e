#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "guk/region.hpp"
#include "support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;
const guk::RegionSpec<double> kRegion{};

VectorXd positions(std::initializer_list<std::pair<double, double>> xy) {
  VectorXd q = VectorXd::Zero(3 * static_cast<Eigen::Index>(xy.size()));
  Eigen::Index i = 0;
  for (const auto& [x, y] : xy) {
    q(3 * i) = x;
    q(3 * i + 1) = y;
    q(3 * i + 2) = 0.1 * static_cast<double>(i);
    ++i;
  }
  return q;
}

}  // namespace

TEST(Region, SpecValidation) {
  EXPECT_NO_THROW(kRegion.validate());
  auto bad = kRegion;
  bad.inner.x_min = -10.0;
  try {
    bad.validate();
    FAIL() << "expected ordering violation";
  } catch (const guk::InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("x_o < x_b"), std::string::npos) << e.what();
  }
  bad = kRegion;
  bad.outer.y_max = 14.0;
  EXPECT_THROW(bad.validate(), guk::InvalidInput);
  bad = kRegion;
  bad.gamma2 = 0.0;
  EXPECT_THROW(bad.validate(), guk::InvalidInput);
  bad = kRegion;
  bad.hysteresis = -0.1;
  EXPECT_THROW(bad.validate(), guk::InvalidInput);
}

TEST(Region, DiffeoValues) {
  const VectorXd xi = guk::diffeo(positions({{20.0, 0.0}, {5.0, 7.5}}), kRegion);
  EXPECT_NEAR(xi(0), 0.0, 1e-15);
  EXPECT_NEAR(xi(1), 0.0, 1e-15);
  EXPECT_NEAR(xi(2), -1.0, 1e-14);
  EXPECT_NEAR(xi(3), 1.0, 1e-14);
  double previous = 0.0;
  for (double gap : {1.0, 1e-1, 1e-2, 1e-4, 1e-6}) {
    const double v = guk::diffeo(positions({{50.0 - gap, 0.0}}), kRegion)(0);
    EXPECT_GT(v, previous);
    previous = v;
  }
  EXPECT_GT(previous, 1e6);
  EXPECT_THROW(guk::diffeo(positions({{50.0, 0.0}}), kRegion), guk::DomainViolation);
  EXPECT_THROW(guk::diffeo(positions({{0.0, 0.0}, {0.0, -15.5}}), kRegion), guk::DomainViolation);
  try {
    guk::diffeo(positions({{0.0, 0.0}, {0.0, -15.5}}), kRegion);
  } catch (const guk::DomainViolation& e) {
    EXPECT_EQ(e.robot(), 1);
  }
}

TEST(Region, JacobianAtCenterAndByFiniteDifferences) {
  const MatrixXd center = guk::diffeo_jacobian(positions({{20.0, 0.0}}), kRegion);
  EXPECT_NEAR(center(0, 0), kPi / 60.0, 1e-15);
  EXPECT_NEAR(center(1, 1), kPi / 30.0, 1e-15);
  EXPECT_EQ(center(0, 1), 0.0);
  EXPECT_EQ(center(1, 0), 0.0);
  EXPECT_EQ(center.col(2).norm(), 0.0);

  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> px(-9.0, 49.0), py(-14.0, 14.0);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd q = positions({{px(rng), py(rng)}, {px(rng), py(rng)}});
    const MatrixXd jac = guk::diffeo_jacobian(q, kRegion);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      VectorXd qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      const VectorXd fd = (guk::diffeo(qp, kRegion) - guk::diffeo(qm, kRegion)) / (2 * h);
      EXPECT_LE((jac.col(j) - fd).norm(), 1e-6 * (1 + fd.norm())) << "trial " << trial << " col " << j;
    }
  }
}

TEST(Region, JacobianRateByFiniteDifferences) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> px(-8.0, 48.0), py(-13.0, 13.0), v(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd q = positions({{px(rng), py(rng)}, {px(rng), py(rng)}});
    const VectorXd qd = VectorXd::NullaryExpr(6, [&] { return v(rng); });
    const double h = 1e-6;
    const MatrixXd fd = (guk::diffeo_jacobian(VectorXd(q + h * qd), kRegion) -
                         guk::diffeo_jacobian(VectorXd(q - h * qd), kRegion)) / (2 * h);
    EXPECT_LE((guk::diffeo_jacobian_rate(q, qd, kRegion) - fd).norm(), 1e-6 * (1 + fd.norm()));
  }
}

TEST(Region, SecondDerivativeAlongATrajectory) {
  // ξ̈ = J̇q̇ + J q̈ along q(t) = q0 + v t + ½ a t².
  const VectorXd q0 = positions({{40.0, 10.0}, {-5.0, -12.0}});
  VectorXd v(6), a(6);
  v << 1.2, 0.5, 0.1, -0.8, -0.3, 0.0;
  a << 0.4, -0.2, 0.0, 0.1, 0.6, 0.0;
  auto q_at = [&](double t) { return VectorXd(q0 + v * t + 0.5 * a * t * t); };
  const double t = 0.3, h = 1e-4;
  const VectorXd qd = v + a * t;
  const auto terms = guk::inequality_terms(q_at(t), qd, a, kRegion);
  const VectorXd fd = (guk::diffeo(q_at(t + h), kRegion) - 2 * guk::diffeo(q_at(t), kRegion) +
                       guk::diffeo(q_at(t - h), kRegion)) / (h * h);
  EXPECT_LE((terms.p1 - fd).norm(), 1e-5 * (1 + fd.norm()));
  const VectorXd xidot_fd = (guk::diffeo(q_at(t + h), kRegion) - guk::diffeo(q_at(t - h), kRegion)) / (2 * h);
  EXPECT_LE((terms.xidot - xidot_fd).norm(), 1e-7);
}

TEST(Region, P2Structure) {
  const VectorXd q = positions({{10.0, 3.0}, {45.0, -9.0}, {0.0, 0.0}});
  const auto terms = guk::inequality_terms(q, VectorXd(VectorXd::Zero(9)), VectorXd(VectorXd::Zero(9)), kRegion);
  EXPECT_LE(terms.p1.norm(), 1e-15);
  const MatrixXd jac = guk::diffeo_jacobian(q, kRegion);
  const MatrixXd oracle = jac * guk::kron_i3(guk::consensus_projector<double>(3));
  EXPECT_LE((terms.p2 - oracle).norm(), 1e-15);
  EXPECT_EQ(guk::numerical_rank(terms.p2), 2);
}

TEST(Region, SwitchAndHysteresis) {
  auto region = kRegion;
  EXPECT_FALSE(guk::region_active(positions({{0.0, 0.0}, {49.5, 14.5}}), region));
  EXPECT_TRUE(guk::region_active(positions({{0.0, 0.0}, {49.6, 0.0}}), region));
  EXPECT_TRUE(guk::region_active(positions({{-9.51, 0.0}}), region));
  region.hysteresis = 0.2;
  EXPECT_FALSE(guk::region_active(positions({{49.4, 0.0}}), region, false));
  EXPECT_TRUE(guk::region_active(positions({{49.4, 0.0}}), region, true));
  EXPECT_FALSE(guk::region_active(positions({{49.2, 0.0}}), region, true));
}

TEST(Region, RStarBranches) {
  const VectorXd centered = positions({{20.0, 0.0}, {25.0, 3.0}});
  const auto inactive = guk::inequality_terms(centered, VectorXd(VectorXd::Ones(6)), VectorXd(VectorXd::Ones(6)), kRegion);
  const auto r0 = guk::r_star(inactive, centered, kRegion);
  EXPECT_FALSE(r0.active);
  EXPECT_EQ(r0.r, VectorXd(VectorXd::Zero(6)));

  const auto still = guk::inequality_terms(positions({{20.0, 0.0}}), VectorXd(VectorXd::Zero(3)), VectorXd(VectorXd::Zero(3)), kRegion);
  EXPECT_EQ(guk::r_star(still, true, kRegion).r.norm(), 0.0);

  // A single robot: p2 has full row rank, so the barrier dynamics are met exactly.
  const VectorXd single = positions({{49.6, 0.0}});
  const VectorXd qd = (VectorXd(3) << 0.8, -0.3, 0.2).finished();
  const VectorXd acc = (VectorXd(3) << 0.5, 0.1, 0.0).finished();
  const auto terms = guk::inequality_terms(single, qd, acc, kRegion);
  const auto rs = guk::r_star(terms, single, kRegion);
  ASSERT_TRUE(rs.active);
  const VectorXd xidd = terms.p1 + terms.p2 * rs.r;
  EXPECT_LE((xidd + kRegion.gamma1 * terms.xidot + kRegion.gamma2 * terms.xi).norm(), 1e-6);
  EXPECT_LE(rs.conflict, 1e-6);
}

TEST(Region, RStarIsALeastSquaresSolutionForSeveralRobots) {
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> v(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd q = positions({{49.6, 0.0}, {20.0, 3.0}, {0.0, -14.7}});
    const VectorXd qd = VectorXd::NullaryExpr(9, [&] { return v(rng); });
    const VectorXd acc = VectorXd::NullaryExpr(9, [&] { return v(rng); });
    const auto terms = guk::inequality_terms(q, qd, acc, kRegion);
    const auto rs = guk::r_star(terms, q, kRegion);
    ASSERT_TRUE(rs.active);
    const VectorXd rhs = terms.p1 + kRegion.gamma1 * terms.xidot + kRegion.gamma2 * terms.xi;
    const VectorXd normal = terms.p2.transpose() * (terms.p2 * rs.r + rhs);
    EXPECT_LE(normal.norm(), 1e-8 * (1 + terms.p2.norm() * rhs.norm()));
    // Minimum norm: r* has no component in N(p2).
    const MatrixXd null_proj = MatrixXd::Identity(9, 9) - guk::pseudo_inverse(terms.p2) * terms.p2;
    EXPECT_LE((null_proj * rs.r).norm(), 1e-8 * (1 + rs.r.norm()));
    EXPECT_NEAR(rs.conflict, (terms.p2 * rs.r + rhs).norm(), 1e-9 * (1 + rhs.norm()));
  }
}

TEST(Region, ForceIsARigidShift) {
  std::mt19937_64 rng(64);
  const auto g = guk::testing::experiment_graph();
  const auto topo = guk::build_augmented_laplacian<double>(g.adjacency, g.leader_links);
  std::vector<guk::RobotParams<double>> params(5, guk::RobotParams<double>{});
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = guk::testing::random_state(rng, 5, 0.0);
    const auto sys = guk::stacked_system(s, std::span<const guk::RobotParams<double>>(params));
    const VectorXd r = VectorXd::Random(15);
    const VectorXd fci = guk::region_force(sys.M, r);
    const VectorXd shift = sys.M.lu().solve(fci);
    for (int i = 1; i < 5; ++i) EXPECT_LE((shift.segment<3>(3 * i) - shift.head<3>()).norm(), 1e-10);
    EXPECT_LE((guk::kron_i3_apply(topo.augmented_laplacian, shift)).norm(), 1e-10);
  }
  EXPECT_EQ(guk::region_force<double>(MatrixXd::Identity(6, 6), VectorXd::Zero(6)), VectorXd::Zero(6));
}
