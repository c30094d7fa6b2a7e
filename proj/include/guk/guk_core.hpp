#pragma once

// Generalized Udwadia-Kalaba forces with the weighting N = M⁻² eliminated:
//   equality channel   F^{c,e} = M A⁺ (b − A M⁻¹ F)
//   inequality channel F^{c,i} = M (I − A⁺A) r
// The inequality channel lives in N(A M⁻¹) and never disturbs A q̈ = b.

#include "guk/errors.hpp"
#include "guk/linalg.hpp"

namespace guk {

template <typename Scalar>
struct EqualityConstraint {
  MatX<Scalar> A;  // s x N
  VecX<Scalar> b;  // s

  Eigen::Index count() const { return A.rows(); }
  Eigen::Index dofs() const { return A.cols(); }
};

template <typename Scalar>
struct BaumgarteGains {
  Scalar alpha = Scalar(4);
  Scalar beta = Scalar(0.5);
};

namespace detail {

template <typename Scalar>
Eigen::FullPivLU<MatX<Scalar>> factor_mass(const MatX<Scalar>& M) {
  if (M.rows() != M.cols()) throw InvalidInput("mass matrix must be square");
  Eigen::FullPivLU<MatX<Scalar>> lu(M);
  if (!lu.isInvertible()) throw NumericalError("mass matrix is singular");
  return lu;
}

template <typename Scalar>
void check_constraint(const EqualityConstraint<Scalar>& c, Eigen::Index dofs) {
  if (c.A.cols() != dofs || c.b.size() != c.A.rows()) {
    throw InvalidInput("equality constraint dimensions do not match the system");
  }
}

}  // namespace detail

/// a = M⁻¹F by linear solve.
template <typename Scalar>
VecX<Scalar> unconstrained_acceleration(const MatX<Scalar>& M, const VecX<Scalar>& F) {
  if (F.size() != M.rows()) throw InvalidInput("unconstrained_acceleration: size mismatch");
  return detail::factor_mass(M).solve(F);
}

template <typename Scalar>
VecX<Scalar> equality_force(const MatX<Scalar>& M, const VecX<Scalar>& F,
                            const EqualityConstraint<Scalar>& c) {
  detail::check_constraint(c, M.rows());
  const VecX<Scalar> a = unconstrained_acceleration(M, F);
  return M * (pseudo_inverse(c.A) * (c.b - c.A * a));
}

template <typename Scalar>
VecX<Scalar> nullspace_force(const MatX<Scalar>& M, const EqualityConstraint<Scalar>& c,
                             const VecX<Scalar>& r) {
  detail::check_constraint(c, M.rows());
  if (r.size() != M.rows()) throw InvalidInput("nullspace_force: r has wrong length");
  detail::factor_mass(M);
  const MatX<Scalar> pinv = pseudo_inverse(c.A);
  return M * (r - pinv * (c.A * r));
}

/// Orthogonal projector I − A⁺A onto N(A).
template <typename Scalar>
MatX<Scalar> nullspace_projector(const MatX<Scalar>& A) {
  return MatX<Scalar>::Identity(A.cols(), A.cols()) - pseudo_inverse(A) * A;
}

/// Right side b of A q̈ = b such that Ψ̈ + K(αΨ̇ + βΨ) = 0, given Ψ̈ = A q̈ − kinematic_terms.
/// K = I recovers the scalar form Ψ̈ + αΨ̇ + βΨ = 0.
template <typename Scalar>
VecX<Scalar> baumgarte_rhs(const VecX<Scalar>& psi, const VecX<Scalar>& psi_dot,
                           const VecX<Scalar>& kinematic_terms, const BaumgarteGains<Scalar>& gains,
                           const MatX<Scalar>& gain_shaping) {
  if (!(gains.alpha > Scalar(0)) || !(gains.beta > Scalar(0))) {
    throw InvalidInput("baumgarte_rhs: gains must be positive");
  }
  if (psi.size() != psi_dot.size() || psi.size() != kinematic_terms.size() ||
      gain_shaping.rows() != psi.size() || gain_shaping.cols() != psi.size()) {
    throw InvalidInput("baumgarte_rhs: size mismatch");
  }
  return kinematic_terms - gain_shaping * (gains.alpha * psi_dot + gains.beta * psi);
}

template <typename Scalar>
VecX<Scalar> baumgarte_rhs(const VecX<Scalar>& psi, const VecX<Scalar>& psi_dot,
                           const VecX<Scalar>& kinematic_terms, const BaumgarteGains<Scalar>& gains) {
  return baumgarte_rhs(psi, psi_dot, kinematic_terms, gains,
                       MatX<Scalar>::Identity(psi.size(), psi.size()).eval());
}

}  // namespace guk
