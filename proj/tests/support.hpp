#pragma once

// Shared generators and oracles for the test suites.

#include <Eigen/Dense>

#include <algorithm>
#include <numbers>
#include <queue>
#include <random>
#include <vector>

#include "guk/sim.hpp"

namespace guk::testing {

struct Digraph {
  Eigen::MatrixXd adjacency;  // a_ij > 0: follower i listens to follower j
  Eigen::VectorXd leader_links;
};

/// Random digraph containing a spanning tree rooted at the leader, plus extra edges.
inline Digraph random_spanning_digraph(std::mt19937_64& rng, int n, double extra_edge_p = 0.3) {
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Digraph g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (int k = 0; k < n; ++k) {
    const int i = order[static_cast<std::size_t>(k)];
    std::uniform_int_distribution<int> pick(-1, k - 1);
    const int parent = pick(rng);
    if (parent < 0) {
      g.leader_links(i) = weight(rng);
    } else {
      g.adjacency(i, order[static_cast<std::size_t>(parent)]) = weight(rng);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && g.adjacency(i, j) == 0.0 && unit(rng) < extra_edge_p) g.adjacency(i, j) = weight(rng);
    }
  }
  return g;
}

/// Arbitrary digraph; may or may not contain a spanning tree.
inline Digraph random_digraph(std::mt19937_64& rng, int n, double p) {
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Digraph g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    if (unit(rng) < p) g.leader_links(i) = weight(rng);
    for (int j = 0; j < n; ++j) {
      if (i != j && unit(rng) < p) g.adjacency(i, j) = weight(rng);
    }
  }
  return g;
}

/// Breadth-first reachability from the leader along information edges.
inline bool reachable_from_leader(const Digraph& g) {
  const auto n = static_cast<int>(g.leader_links.size());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<int> frontier;
  for (int i = 0; i < n; ++i) {
    if (g.leader_links(i) > 0.0) {
      seen[static_cast<std::size_t>(i)] = true;
      frontier.push(i);
    }
  }
  while (!frontier.empty()) {
    const int j = frontier.front();
    frontier.pop();
    for (int i = 0; i < n; ++i) {
      if (!seen[static_cast<std::size_t>(i)] && g.adjacency(i, j) > 0.0) {
        seen[static_cast<std::size_t>(i)] = true;
        frontier.push(i);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

/// The adjacency and leader links of the four-follower experiment, typed in independently.
inline Digraph experiment_graph() {
  Digraph g{Eigen::MatrixXd(4, 4), Eigen::VectorXd(4)};
  g.adjacency << 0, 0, 0, 0.5, 0.6, 0, 0.3, 0, 0, 0.3, 0, 0, 0.5, 0, 0.3, 0;
  g.leader_links << 0.8, 0, 0, 0;
  return g;
}

/// Random state of the experiment: positions inside the field, bounded velocities, any heading.
inline StackedState<double> random_state(std::mt19937_64& rng, int robots, double t) {
  std::uniform_real_distribution<double> px(-9.0, 49.0), py(-14.0, 14.0), vel(-3.0, 3.0),
      ang(-std::numbers::pi, std::numbers::pi);
  StackedState<double> s{Eigen::VectorXd(3 * robots), Eigen::VectorXd(3 * robots), t};
  for (int i = 0; i < robots; ++i) {
    s.q.segment<3>(3 * i) << px(rng), py(rng), ang(rng);
    s.qdot.segment<3>(3 * i) << vel(rng), vel(rng), vel(rng);
  }
  return s;
}

}  // namespace guk::testing
