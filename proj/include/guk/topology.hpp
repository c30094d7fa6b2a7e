#pragma once

// Leader-follower communication graph: augmented Laplacian, spanning-tree test,
// pseudoinverse identities and the spectral gain condition of the formation controller.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "guk/errors.hpp"
#include "guk/linalg.hpp"

namespace guk {

template <typename Scalar>
struct AugmentedTopology {
  Eigen::Index n = 0;                ///< follower count
  MatX<Scalar> adjacency;            ///< n x n, a_ij >= 0, zero diagonal
  VecX<Scalar> leader_links;         ///< b_i0 >= 0
  MatX<Scalar> laplacian;            ///< L, n x n
  MatX<Scalar> augmented_laplacian;  ///< L̄, (n+1) x (n+1), leader row is zero
  VecX<Scalar> eta;                  ///< column sums of L̄
  MatX<Scalar> consensus_projector;  ///< Q = 11ᵀ/(n+1)

  Eigen::Index size() const { return n + 1; }
};

template <typename Scalar>
AugmentedTopology<Scalar> build_augmented_laplacian(const MatX<Scalar>& adjacency,
                                                    const VecX<Scalar>& leader_links) {
  const Eigen::Index n = adjacency.rows();
  if (n == 0) throw InvalidInput("topology: follower count must be positive");
  if (adjacency.cols() != n) throw InvalidInput("topology: adjacency must be square");
  if (leader_links.size() != n) {
    throw InvalidInput("topology: leader_links must have one entry per follower");
  }
  if (!adjacency.allFinite() || !leader_links.allFinite()) {
    throw InvalidInput("topology: non-finite weight");
  }
  if ((adjacency.array() < Scalar(0)).any() || (leader_links.array() < Scalar(0)).any()) {
    throw InvalidInput("topology: negative weight");
  }
  if ((adjacency.diagonal().array() != Scalar(0)).any()) {
    throw InvalidInput("topology: adjacency diagonal must be zero");
  }

  AugmentedTopology<Scalar> topo;
  topo.n = n;
  topo.adjacency = adjacency;
  topo.leader_links = leader_links;
  topo.laplacian = -adjacency;
  topo.laplacian.diagonal() = adjacency.rowwise().sum();

  topo.augmented_laplacian = MatX<Scalar>::Zero(n + 1, n + 1);
  topo.augmented_laplacian.block(1, 0, n, 1) = -leader_links;
  topo.augmented_laplacian.block(1, 1, n, n) = topo.laplacian;
  topo.augmented_laplacian.block(1, 1, n, n).diagonal() += leader_links;

  topo.eta = topo.augmented_laplacian.colwise().sum().transpose();
  topo.consensus_projector = guk::consensus_projector<Scalar>(n + 1);
  return topo;
}

/// True iff rank(L̄) = n, i.e. every follower is reachable from the leader.
template <typename Scalar>
bool has_spanning_tree(const AugmentedTopology<Scalar>& topo) {
  return numerical_rank(topo.augmented_laplacian) == topo.n;
}

template <typename Scalar>
struct IdentityResiduals {
  Scalar projector;  ///< ‖L̄⁺L̄ − (I − Q)‖_F
  Scalar square;     ///< ‖L̄⁺L̄² − (L̄ − 1ηᵀ/(n+1))‖_F
};

template <typename Scalar>
IdentityResiduals<Scalar> consensus_identities(const AugmentedTopology<Scalar>& topo) {
  if (!has_spanning_tree(topo)) {
    throw InvalidInput("consensus_identities: graph has no spanning tree rooted at the leader");
  }
  const auto& lbar = topo.augmented_laplacian;
  const Eigen::Index k = topo.size();
  const MatX<Scalar> pinv = pseudo_inverse(lbar);
  if (!pinv.allFinite()) throw NumericalError("consensus_identities: pseudoinverse failed");
  const MatX<Scalar> id = MatX<Scalar>::Identity(k, k);
  const MatX<Scalar> ones_eta = VecX<Scalar>::Ones(k) * topo.eta.transpose() / Scalar(k);
  return {(pinv * lbar - (id - topo.consensus_projector)).norm(),
          (pinv * lbar * lbar - (lbar - ones_eta)).norm()};
}

/// Eigenvalues of L̄ sorted by (Re, Im).
template <typename Scalar>
std::vector<std::complex<Scalar>> laplacian_eigenvalues(const AugmentedTopology<Scalar>& topo) {
  Eigen::EigenSolver<MatX<Scalar>> solver(topo.augmented_laplacian, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("laplacian_eigenvalues: eigen-solver did not converge");
  }
  std::vector<std::complex<Scalar>> ev(solver.eigenvalues().data(),
                                       solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return ev;
}

/// max_i Im²/((Re+1)Im² + (Re+1)³) over the given eigenvalues; 0 for a real spectrum.
template <typename Scalar>
Scalar gain_threshold(const std::vector<std::complex<Scalar>>& eigenvalues) {
  Scalar best = Scalar(0);
  for (const auto& lambda : eigenvalues) {
    const Scalar im2 = lambda.imag() * lambda.imag();
    if (im2 == Scalar(0)) continue;
    const Scalar re1 = lambda.real() + Scalar(1);
    best = std::max(best, im2 / (re1 * im2 + re1 * re1 * re1));
  }
  return best;
}

template <typename Scalar>
Scalar gain_threshold(const AugmentedTopology<Scalar>& topo) {
  return gain_threshold(laplacian_eigenvalues(topo));
}

template <typename Scalar>
struct SpectralData {
  std::vector<std::complex<Scalar>> eigenvalues;
  Scalar gain_threshold = Scalar(0);
};

template <typename Scalar>
SpectralData<Scalar> spectral_data(const AugmentedTopology<Scalar>& topo) {
  SpectralData<Scalar> out;
  out.eigenvalues = laplacian_eigenvalues(topo);
  out.gain_threshold = gain_threshold(out.eigenvalues);
  return out;
}

/// α²/β strictly above the spectral threshold.
template <typename Scalar>
bool check_gains(Scalar alpha, Scalar beta, const AugmentedTopology<Scalar>& topo) {
  if (!(alpha > Scalar(0)) || !(beta > Scalar(0))) {
    throw InvalidInput("check_gains: alpha and beta must be positive");
  }
  return alpha * alpha / beta > gain_threshold(topo);
}

/// Roots of s² + α(λ+1)s + β(λ+1) = 0, first root taking the minus branch.
template <typename Scalar>
std::pair<std::complex<Scalar>, std::complex<Scalar>> characteristic_roots(
    std::complex<Scalar> lambda, Scalar alpha, Scalar beta) {
  const std::complex<Scalar> mu = lambda + Scalar(1);
  const std::complex<Scalar> disc = std::sqrt(alpha * alpha * mu * mu - Scalar(4) * beta * mu);
  return {Scalar(0.5) * (-alpha * mu - disc), Scalar(0.5) * (-alpha * mu + disc)};
}

/// Largest real part among the characteristic roots of the follower modes (the eigenvalue of L̄
/// closest to zero is the leader's and is skipped). Smaller magnitude means slower decay.
template <typename Scalar>
Scalar slowest_follower_root(const AugmentedTopology<Scalar>& topo, Scalar alpha, Scalar beta) {
  auto ev = laplacian_eigenvalues(topo);
  const auto leader = std::min_element(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return std::abs(a) < std::abs(b);
  });
  ev.erase(leader);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (const auto& lambda : ev) {
    const auto [r1, r2] = characteristic_roots(lambda, alpha, beta);
    worst = std::max({worst, r1.real(), r2.real()});
  }
  return worst;
}

/// State matrix [[0, I], [−β(L̄+I), −α(L̄+I)]] of the closed-loop error system (per coordinate).
template <typename Scalar>
MatX<Scalar> error_system_matrix(const AugmentedTopology<Scalar>& topo, Scalar alpha, Scalar beta) {
  const Eigen::Index k = topo.size();
  const MatX<Scalar> shifted = topo.augmented_laplacian + MatX<Scalar>::Identity(k, k);
  MatX<Scalar> a = MatX<Scalar>::Zero(2 * k, 2 * k);
  a.topRightCorner(k, k).setIdentity();
  a.bottomLeftCorner(k, k) = -beta * shifted;
  a.bottomRightCorner(k, k) = -alpha * shifted;
  return a;
}

}  // namespace guk
