#pragma once

// Rectangular region constraint through the tan barrier ξ = tan(π(x − x_mid)/(x_f − x_o)).
// ξ stays finite exactly while every robot is strictly inside the outer rectangle.

#include <cmath>
#include <numbers>
#include <sstream>

#include "guk/errors.hpp"
#include "guk/guk_core.hpp"
#include "guk/linalg.hpp"

namespace guk {

template <typename Scalar>
struct Rect {
  Scalar x_min{}, x_max{}, y_min{}, y_max{};

  bool contains_closed(Scalar x, Scalar y, Scalar margin = Scalar(0)) const {
    return x >= x_min + margin && x <= x_max - margin && y >= y_min + margin &&
           y <= y_max - margin;
  }
  bool contains_open(Scalar x, Scalar y) const {
    return x > x_min && x < x_max && y > y_min && y < y_max;
  }
  /// Distance outside the rectangle (0 when inside or on the boundary).
  Scalar penetration(Scalar x, Scalar y) const {
    using std::max;
    const Scalar dx = max({x_min - x, x - x_max, Scalar(0)});
    const Scalar dy = max({y_min - y, y - y_max, Scalar(0)});
    return std::hypot(dx, dy);
  }
  bool operator==(const Rect&) const = default;
};

template <typename Scalar>
struct RegionSpec {
  Rect<Scalar> outer{-10, 50, -15, 15};
  Rect<Scalar> inner{Scalar(-9.5), Scalar(49.5), Scalar(-14.5), Scalar(14.5)};
  Scalar gamma1 = Scalar(2);
  Scalar gamma2 = Scalar(1);
  Scalar hysteresis = Scalar(0);  // m; 0 reproduces the hard switch

  /// Throws InvalidInput naming the first violated ordering.
  void validate() const {
    auto order = [](Scalar a, Scalar b, Scalar c, Scalar d, const char* axis) {
      if (!(a < b && b < c && c < d)) {
        std::ostringstream msg;
        msg << "region: require " << axis << "_o < " << axis << "_b < " << axis << "_c < " << axis
            << "_f, got " << a << ", " << b << ", " << c << ", " << d;
        throw InvalidInput(msg.str());
      }
    };
    order(outer.x_min, inner.x_min, inner.x_max, outer.x_max, "x");
    order(outer.y_min, inner.y_min, inner.y_max, outer.y_max, "y");
    if (!(gamma1 > Scalar(0)) || !(gamma2 > Scalar(0))) {
      throw InvalidInput("region: gamma1 and gamma2 must be positive");
    }
    if (!(hysteresis >= Scalar(0))) throw InvalidInput("region: hysteresis must be >= 0");
  }
  bool operator==(const RegionSpec&) const = default;
};

namespace detail {

template <typename Scalar>
struct AxisMap {
  Scalar scale;   // π / (upper − lower)
  Scalar center;  // (upper + lower) / 2
};

template <typename Scalar>
AxisMap<Scalar> x_axis(const RegionSpec<Scalar>& r) {
  return {std::numbers::pi_v<Scalar> / (r.outer.x_max - r.outer.x_min),
          (r.outer.x_max + r.outer.x_min) / Scalar(2)};
}

template <typename Scalar>
AxisMap<Scalar> y_axis(const RegionSpec<Scalar>& r) {
  return {std::numbers::pi_v<Scalar> / (r.outer.y_max - r.outer.y_min),
          (r.outer.y_max + r.outer.y_min) / Scalar(2)};
}

template <typename Scalar>
void require_inside(const VecX<Scalar>& q, const RegionSpec<Scalar>& region) {
  if (q.size() % 3 != 0) throw InvalidInput("region: q must have 3 entries per robot");
  for (Eigen::Index i = 0; i < q.size() / 3; ++i) {
    const Scalar x = q(3 * i);
    const Scalar y = q(3 * i + 1);
    if (!region.outer.contains_open(x, y)) {
      std::ostringstream msg;
      msg << "robot " << i << " at (" << x << ", " << y << ") is not strictly inside the outer region";
      throw DomainViolation(msg.str(), static_cast<int>(i));
    }
  }
}

}  // namespace detail

/// ξ = [ξ_0x, ξ_0y, ξ_1x, ...].
template <typename Scalar>
VecX<Scalar> diffeo(const VecX<Scalar>& q, const RegionSpec<Scalar>& region) {
  using std::tan;
  detail::require_inside(q, region);
  const auto ax = detail::x_axis(region);
  const auto ay = detail::y_axis(region);
  const Eigen::Index robots = q.size() / 3;
  VecX<Scalar> xi(2 * robots);
  for (Eigen::Index i = 0; i < robots; ++i) {
    xi(2 * i) = tan(ax.scale * (q(3 * i) - ax.center));
    xi(2 * i + 1) = tan(ay.scale * (q(3 * i + 1) - ay.center));
  }
  return xi;
}

/// ∂φ/∂q: block diagonal with 2x3 blocks diag(∂ξx/∂x, ∂ξy/∂y) and a zero θ column.
template <typename Scalar>
MatX<Scalar> diffeo_jacobian(const VecX<Scalar>& q, const RegionSpec<Scalar>& region) {
  using std::cos;
  detail::require_inside(q, region);
  const auto ax = detail::x_axis(region);
  const auto ay = detail::y_axis(region);
  const Eigen::Index robots = q.size() / 3;
  MatX<Scalar> jac = MatX<Scalar>::Zero(2 * robots, 3 * robots);
  for (Eigen::Index i = 0; i < robots; ++i) {
    const Scalar cx = cos(ax.scale * (q(3 * i) - ax.center));
    const Scalar cy = cos(ay.scale * (q(3 * i + 1) - ay.center));
    jac(2 * i, 3 * i) = ax.scale / (cx * cx);
    jac(2 * i + 1, 3 * i + 1) = ay.scale / (cy * cy);
  }
  return jac;
}

/// d/dt(∂φ/∂q), entries 2·scale²·sec²(u)·tan(u)·ẋ (and likewise in y).
template <typename Scalar>
MatX<Scalar> diffeo_jacobian_rate(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                  const RegionSpec<Scalar>& region) {
  using std::cos;
  using std::tan;
  detail::require_inside(q, region);
  if (qdot.size() != q.size()) throw InvalidInput("region: qdot size mismatch");
  const auto ax = detail::x_axis(region);
  const auto ay = detail::y_axis(region);
  const Eigen::Index robots = q.size() / 3;
  MatX<Scalar> rate = MatX<Scalar>::Zero(2 * robots, 3 * robots);
  for (Eigen::Index i = 0; i < robots; ++i) {
    const Scalar ux = ax.scale * (q(3 * i) - ax.center);
    const Scalar uy = ay.scale * (q(3 * i + 1) - ay.center);
    const Scalar cx = cos(ux);
    const Scalar cy = cos(uy);
    rate(2 * i, 3 * i) = Scalar(2) * ax.scale * ax.scale * tan(ux) * qdot(3 * i) / (cx * cx);
    rate(2 * i + 1, 3 * i + 1) =
        Scalar(2) * ay.scale * ay.scale * tan(uy) * qdot(3 * i + 1) / (cy * cy);
  }
  return rate;
}

template <typename Scalar>
struct RegionTerms {
  VecX<Scalar> xi;     // ξ
  VecX<Scalar> xidot;  // ξ̇
  VecX<Scalar> p1;     // ξ̈ without the inequality channel
  MatX<Scalar> p2;     // ∂φ/∂q (Q⊗I3)
};

/// ξ̈ = p1 + p2 r, with constrained_accel = M⁻¹(F + F^{c,e}).
template <typename Scalar>
RegionTerms<Scalar> inequality_terms(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                     const VecX<Scalar>& constrained_accel,
                                     const RegionSpec<Scalar>& region) {
  if (constrained_accel.size() != q.size()) throw InvalidInput("region: acceleration size mismatch");
  const Eigen::Index robots = q.size() / 3;
  const MatX<Scalar> jac = diffeo_jacobian(q, region);
  RegionTerms<Scalar> terms;
  terms.xi = diffeo(q, region);
  terms.xidot = jac * qdot;
  terms.p1 = diffeo_jacobian_rate(q, qdot, region) * qdot + jac * constrained_accel;
  terms.p2 = MatX<Scalar>::Zero(2 * robots, 3 * robots);
  for (Eigen::Index i = 0; i < robots; ++i) {
    const auto block = jac.block(2 * i, 3 * i, 2, 3) / Scalar(robots);
    for (Eigen::Index j = 0; j < robots; ++j) terms.p2.block(2 * i, 3 * j, 2, 3) = block;
  }
  return terms;
}

template <typename Scalar>
RegionTerms<Scalar> inequality_terms(const VecX<Scalar>& q, const VecX<Scalar>& qdot,
                                     const MatX<Scalar>& M, const VecX<Scalar>& F,
                                     const VecX<Scalar>& Fce, const RegionSpec<Scalar>& region) {
  return inequality_terms(q, qdot, unconstrained_acceleration(M, (F + Fce).eval()), region);
}

/// Any robot outside the closed inner rectangle. With hysteresis, an active switch stays on
/// until every robot is back inside the inner rectangle shrunk by the band.
template <typename Scalar>
bool region_active(const VecX<Scalar>& q, const RegionSpec<Scalar>& region,
                   bool previously_active = false) {
  const Scalar margin = previously_active ? region.hysteresis : Scalar(0);
  for (Eigen::Index i = 0; i < q.size() / 3; ++i) {
    if (!region.inner.contains_closed(q(3 * i), q(3 * i + 1), margin)) return true;
  }
  return false;
}

template <typename Scalar>
struct RStar {
  VecX<Scalar> r;
  bool active = false;
  Eigen::Index rank = 0;     // rank of p2 (0 when inactive)
  Scalar conflict{};         // ‖p2 r + p1 + γ1ξ̇ + γ2ξ‖, the unmet part of the ξ target
};

/// r* = 0 when inactive, else −p2⁺(p1 + γ1ξ̇ + γ2ξ).
template <typename Scalar>
RStar<Scalar> r_star(const RegionTerms<Scalar>& terms, bool active, const RegionSpec<Scalar>& region) {
  RStar<Scalar> out;
  out.r = VecX<Scalar>::Zero(terms.p2.cols());
  out.active = active;
  if (!active) return out;
  const VecX<Scalar> rhs = terms.p1 + region.gamma1 * terms.xidot + region.gamma2 * terms.xi;
  out.r = -pseudo_inverse(terms.p2) * rhs;
  out.rank = numerical_rank(terms.p2);
  out.conflict = (terms.p2 * out.r + rhs).norm();
  return out;
}

template <typename Scalar>
RStar<Scalar> r_star(const RegionTerms<Scalar>& terms, const VecX<Scalar>& q,
                     const RegionSpec<Scalar>& region) {
  return r_star(terms, region_active(q, region), region);
}

/// F^{c,i} = M (Q⊗I3) r*.
template <typename Scalar>
VecX<Scalar> region_force(const MatX<Scalar>& M, const VecX<Scalar>& r) {
  if (M.cols() != r.size()) throw InvalidInput("region_force: size mismatch");
  return M * block_mean_replicate(r);
}

}  // namespace guk
