#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sls {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Network topology: hop distances between nodes plus the node hosting each
// actuation channel.
struct Topology {
  int n = 0;
  Eigen::MatrixXi dist;
  std::vector<int> node_of_actuator;  // 0-based node index per input channel

  Topology() = default;
  Topology(Eigen::MatrixXi dist_in, std::vector<int> actuators)
      : n(static_cast<int>(dist_in.rows())),
        dist(std::move(dist_in)),
        node_of_actuator(std::move(actuators)) {
    if (n < 1 || dist.cols() != n) throw std::invalid_argument("Topology: dist must be square");
    for (int i = 0; i < n; ++i) {
      if (dist(i, i) != 0) throw std::invalid_argument("Topology: dist diagonal must be zero");
      for (int j = 0; j < n; ++j) {
        if (dist(i, j) < 0) throw std::invalid_argument("Topology: dist must be nonnegative");
        if (dist(i, j) != dist(j, i)) throw std::invalid_argument("Topology: dist must be symmetric");
      }
    }
    for (int node : node_of_actuator)
      if (node < 0 || node >= n)
        throw std::invalid_argument("Topology: actuator node out of range");
  }

  int m() const { return static_cast<int>(node_of_actuator.size()); }
};

// Chain of n nodes with unit hop distance; actuated_nodes are 1-based.
inline Topology chain_topology(int n, const std::vector<int>& actuated_nodes) {
  if (n < 1) throw std::invalid_argument("chain_topology: n must be positive");
  Eigen::MatrixXi dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dist(i, j) = std::abs(i - j);
  std::vector<int> actuators;
  actuators.reserve(actuated_nodes.size());
  for (int node : actuated_nodes) {
    if (node < 1 || node > n) throw std::invalid_argument("chain_topology: actuator node out of range");
    actuators.push_back(node - 1);
  }
  return Topology(std::move(dist), std::move(actuators));
}

// Per-spectral-index support patterns for the implementation pair: patterns_R[k-1]
// constrains R_c(k) (n x n) and patterns_M[k-1] constrains M_c(k) (m x n),
// k = 1..horizon. Row a of M_c is constrained through the node hosting actuator a.
struct SparsityMask {
  int horizon = 0;
  std::vector<BoolMatrix> patterns_R;
  std::vector<BoolMatrix> patterns_M;

  SparsityMask() = default;
  SparsityMask(std::vector<BoolMatrix> r, std::vector<BoolMatrix> m)
      : horizon(static_cast<int>(r.size())), patterns_R(std::move(r)), patterns_M(std::move(m)) {
    validate();
  }

  int n() const { return patterns_R.empty() ? 0 : static_cast<int>(patterns_R[0].rows()); }
  int m() const { return patterns_M.empty() ? 0 : static_cast<int>(patterns_M[0].rows()); }

  const BoolMatrix& pattern_R(int k) const { return patterns_R.at(static_cast<size_t>(k - 1)); }
  const BoolMatrix& pattern_M(int k) const { return patterns_M.at(static_cast<size_t>(k - 1)); }

  void validate() const {
    if (horizon < 1 || patterns_R.size() != static_cast<size_t>(horizon) ||
        patterns_M.size() != static_cast<size_t>(horizon))
      throw std::invalid_argument("SparsityMask: need one R and one M pattern per index 1..horizon");
    const int nn = n();
    const int mm = static_cast<int>(patterns_M[0].rows());
    for (const auto& p : patterns_R)
      if (p.rows() != nn || p.cols() != nn)
        throw std::invalid_argument("SparsityMask: R pattern shape mismatch");
    for (const auto& p : patterns_M)
      if (p.rows() != mm || p.cols() != nn)
        throw std::invalid_argument("SparsityMask: M pattern shape mismatch");
    for (int i = 0; i < nn; ++i)
      if (!patterns_R[0](i, i))
        throw std::invalid_argument("SparsityMask: pattern_R(1) must admit the diagonal (R_c(1) = I)");
  }
};

// Checks that every actuation column touches exactly one node and returns the
// node index per channel; row constraints on M_c are derived from these nodes.
inline std::vector<int> actuator_nodes_from_b(const Eigen::MatrixXd& b) {
  std::vector<int> nodes;
  nodes.reserve(static_cast<size_t>(b.cols()));
  for (Eigen::Index a = 0; a < b.cols(); ++a) {
    int node = -1;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      if (b(i, a) != 0.0) {
        if (node >= 0)
          throw std::invalid_argument(
              "actuator_nodes_from_b: actuation column touches more than one node");
        node = static_cast<int>(i);
      }
    }
    if (node < 0) throw std::invalid_argument("actuator_nodes_from_b: zero actuation column");
    nodes.push_back(node);
  }
  return nodes;
}

// Locality: entry (i, j) allowed iff dist(i, j) <= l, identical for every k.
inline SparsityMask locality_mask(const Topology& topo, int l, int horizon) {
  if (l < 0) throw std::invalid_argument("locality_mask: l must be nonnegative");
  if (horizon < 1) throw std::invalid_argument("locality_mask: horizon must be positive");
  BoolMatrix r(topo.n, topo.n);
  for (int i = 0; i < topo.n; ++i)
    for (int j = 0; j < topo.n; ++j) r(i, j) = topo.dist(i, j) <= l;
  BoolMatrix m(topo.m(), topo.n);
  for (int a = 0; a < topo.m(); ++a)
    for (int j = 0; j < topo.n; ++j) m(a, j) = topo.dist(topo.node_of_actuator[a], j) <= l;
  return SparsityMask(std::vector<BoolMatrix>(static_cast<size_t>(horizon), r),
                      std::vector<BoolMatrix>(static_cast<size_t>(horizon), m));
}

// Communication delay d(i, j) = ceil(dist(i, j) / comm_speed).
inline int comm_delay(int dist, double comm_speed) {
  if (comm_speed <= 0.0) throw std::invalid_argument("comm_delay: comm_speed must be positive");
  return static_cast<int>(std::ceil(static_cast<double>(dist) / comm_speed - 1e-12));
}

// Delay: entry (i, j) of spectral index k allowed iff k >= d(i, j), so the
// admissible band widens as k grows.
inline SparsityMask delay_mask(const Topology& topo, double comm_speed, int horizon) {
  if (horizon < 1) throw std::invalid_argument("delay_mask: horizon must be positive");
  std::vector<BoolMatrix> rs, ms;
  rs.reserve(static_cast<size_t>(horizon));
  ms.reserve(static_cast<size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    BoolMatrix r(topo.n, topo.n);
    for (int i = 0; i < topo.n; ++i)
      for (int j = 0; j < topo.n; ++j) r(i, j) = k >= comm_delay(topo.dist(i, j), comm_speed);
    BoolMatrix m(topo.m(), topo.n);
    for (int a = 0; a < topo.m(); ++a)
      for (int j = 0; j < topo.n; ++j)
        m(a, j) = k >= comm_delay(topo.dist(topo.node_of_actuator[a], j), comm_speed);
    rs.push_back(std::move(r));
    ms.push_back(std::move(m));
  }
  return SparsityMask(std::move(rs), std::move(ms));
}

inline SparsityMask intersect(const SparsityMask& a, const SparsityMask& b) {
  if (a.horizon != b.horizon || a.n() != b.n() || a.m() != b.m())
    throw std::invalid_argument("intersect: mask dimension mismatch");
  std::vector<BoolMatrix> rs, ms;
  for (int k = 1; k <= a.horizon; ++k) {
    rs.push_back(BoolMatrix(a.pattern_R(k).array() && b.pattern_R(k).array()));
    ms.push_back(BoolMatrix(a.pattern_M(k).array() && b.pattern_M(k).array()));
  }
  return SparsityMask(std::move(rs), std::move(ms));
}

// Entrywise l1 weight tensors for the regularized synthesis; weights_R[k-1](i, j)
// multiplies |R_c(k)^{i,j}| and weights_M analogously through actuator nodes.
struct PenaltyWeights {
  int horizon = 0;
  std::vector<Eigen::MatrixXd> weights_R;
  std::vector<Eigen::MatrixXd> weights_M;
};

// Delay-tolerance penalty e^{dist(i,j) - k}: late spectral terms are cheap.
inline PenaltyWeights delay_penalty_weights(const Topology& topo, int horizon) {
  if (horizon < 1) throw std::invalid_argument("delay_penalty_weights: horizon must be positive");
  PenaltyWeights out;
  out.horizon = horizon;
  for (int k = 1; k <= horizon; ++k) {
    Eigen::MatrixXd r(topo.n, topo.n);
    for (int i = 0; i < topo.n; ++i)
      for (int j = 0; j < topo.n; ++j) r(i, j) = std::exp(static_cast<double>(topo.dist(i, j) - k));
    Eigen::MatrixXd m(topo.m(), topo.n);
    for (int a = 0; a < topo.m(); ++a)
      for (int j = 0; j < topo.n; ++j)
        m(a, j) = std::exp(static_cast<double>(topo.dist(topo.node_of_actuator[a], j) - k));
    out.weights_R.push_back(std::move(r));
    out.weights_M.push_back(std::move(m));
  }
  return out;
}

// Locality penalty e^{dist(i,j)}, constant across k.
inline PenaltyWeights locality_penalty_weights(const Topology& topo, int horizon) {
  if (horizon < 1) throw std::invalid_argument("locality_penalty_weights: horizon must be positive");
  Eigen::MatrixXd r(topo.n, topo.n);
  for (int i = 0; i < topo.n; ++i)
    for (int j = 0; j < topo.n; ++j) r(i, j) = std::exp(static_cast<double>(topo.dist(i, j)));
  Eigen::MatrixXd m(topo.m(), topo.n);
  for (int a = 0; a < topo.m(); ++a)
    for (int j = 0; j < topo.n; ++j)
      m(a, j) = std::exp(static_cast<double>(topo.dist(topo.node_of_actuator[a], j)));
  PenaltyWeights out;
  out.horizon = horizon;
  out.weights_R.assign(static_cast<size_t>(horizon), r);
  out.weights_M.assign(static_cast<size_t>(horizon), m);
  return out;
}

}  // namespace sls
