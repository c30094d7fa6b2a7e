#pragma once

// Dense linear-algebra helpers shared by every module: pseudoinverse, rank,
// and the (X ⊗ I3) Kronecker products that act on stacked 3-per-robot vectors.

#include <Eigen/Dense>

#include <cmath>

#include "guk/errors.hpp"

namespace guk {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// Singular values below this fraction of the largest one are treated as zero.
inline constexpr double kRelativeCutoff = 1e-9;

/// Moore-Penrose inverse via SVD with a relative singular-value cutoff.
template <typename Derived>
MatX<typename Derived::Scalar> pseudo_inverse(
    const Eigen::MatrixBase<Derived>& a,
    typename Derived::RealScalar rel_cutoff = kRelativeCutoff) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) {
    return MatX<Scalar>::Zero(a.cols(), a.rows());
  }
  if (!a.allFinite()) {
    throw NumericalError("pseudo_inverse: non-finite input matrix");
  }
  Eigen::JacobiSVD<MatX<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto cutoff = rel_cutoff * (sv.size() > 0 ? sv(0) : Scalar(0));
  VecX<Scalar> inv = VecX<Scalar>::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > Scalar(0)) inv(i) = Scalar(1) / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/// Number of singular values above rel_cutoff times the largest.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& a,
                            typename Derived::RealScalar rel_cutoff = kRelativeCutoff) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<MatX<Scalar>> svd(a);
  const auto& sv = svd.singularValues();
  if (sv(0) <= Scalar(0)) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_cutoff * sv(0)) ++rank;
  }
  return rank;
}

/// Explicit X ⊗ I3.
template <typename Derived>
MatX<typename Derived::Scalar> kron_i3(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatX<Scalar> out = MatX<Scalar>::Zero(3 * x.rows(), 3 * x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.template block<3, 3>(3 * i, 3 * j).diagonal().setConstant(x(i, j));
    }
  }
  return out;
}

/// (X ⊗ I3) v without forming the Kronecker product. v is [v_0; v_1; ...] in 3-blocks.
template <typename DerivedX, typename DerivedV>
VecX<typename DerivedV::Scalar> kron_i3_apply(const Eigen::MatrixBase<DerivedX>& x,
                                              const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedV::Scalar;
  if (v.size() != 3 * x.cols()) {
    throw InvalidInput("kron_i3_apply: vector length does not match 3 * cols");
  }
  const VecX<Scalar> vv = v;
  Eigen::Map<const MatX<Scalar>> blocks(vv.data(), 3, x.cols());
  VecX<Scalar> out(3 * x.rows());
  Eigen::Map<MatX<Scalar>>(out.data(), 3, x.rows()) = blocks * x.transpose();
  return out;
}

/// (Q ⊗ I3) v with Q = 11ᵀ/(n+1): every 3-block is replaced by the block mean.
template <typename Derived>
VecX<typename Derived::Scalar> block_mean_replicate(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index robots = v.size() / 3;
  if (robots == 0 || v.size() % 3 != 0) {
    throw InvalidInput("block_mean_replicate: length must be a positive multiple of 3");
  }
  Vec3<Scalar> mean = Vec3<Scalar>::Zero();
  for (Eigen::Index i = 0; i < robots; ++i) mean += v.template segment<3>(3 * i);
  mean /= Scalar(robots);
  return mean.replicate(robots, 1);
}

/// Q_{k} = (1/k) 1 1ᵀ.
template <typename Scalar>
MatX<Scalar> consensus_projector(Eigen::Index k) {
  return MatX<Scalar>::Constant(k, k, Scalar(1) / Scalar(k));
}

}  // namespace guk
