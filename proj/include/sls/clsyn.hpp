#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sls/linalg.hpp"
#include "sls/lti_core.hpp"
#include "sls/sparsity.hpp"

namespace sls {

// Achievable closed-loop pair: phi_x maps w -> x, phi_u maps w -> u, both
// strictly proper FIR with a shared horizon T.
struct ClosedLoopMaps {
  FirTransferMatrix phi_x;
  FirTransferMatrix phi_u;

  ClosedLoopMaps() = default;
  ClosedLoopMaps(FirTransferMatrix x, FirTransferMatrix u)
      : phi_x(std::move(x)), phi_u(std::move(u)) {
    phi_x.validate();
    phi_u.validate();
    if (phi_x.rows != phi_x.cols) throw std::invalid_argument("ClosedLoopMaps: phi_x must be square");
    if (phi_u.cols != phi_x.cols) throw std::invalid_argument("ClosedLoopMaps: column mismatch");
    if (phi_x.start != 1 || phi_u.start != 1)
      throw std::invalid_argument("ClosedLoopMaps: maps must be strictly proper (start 1)");
    if (phi_x.horizon != phi_u.horizon)
      throw std::invalid_argument("ClosedLoopMaps: maps must share one horizon");
  }

  int n() const { return phi_x.rows; }
  int m() const { return phi_u.rows; }
  int T() const { return phi_x.horizon; }
};

struct LqrWeights {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;

  LqrWeights() = default;
  LqrWeights(Eigen::MatrixXd q, Eigen::MatrixXd r) : Q(std::move(q)), R(std::move(r)) {
    auto check_symmetric = [](const Eigen::MatrixXd& m, const char* name) {
      if (m.rows() != m.cols()) throw std::invalid_argument(std::string(name) + " must be square");
      const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument(std::string(name) + " must be symmetric");
    };
    check_symmetric(Q, "LqrWeights: Q");
    check_symmetric(R, "LqrWeights: R");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(Q);
    if (eq.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, Q.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("LqrWeights: Q must be positive semidefinite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(R);
    if (er.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("LqrWeights: R must be positive definite");
  }

  static LqrWeights identity(int n, int m) {
    return LqrWeights(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(m, m));
  }
};

// One step of the achievability recursion, A R + B M, materialized so that
// independent callers computing it on the same inputs get identical floats.
inline Eigen::MatrixXd recursion_step(const LtiSystem& sys, const Eigen::MatrixXd& r,
                                      const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = sys.A * r;
  out.noalias() += sys.B * m;
  return out;
}

// sqrt of the squared Frobenius defects of the achievability recursion:
// phi_x(1) = I, phi_x(k+1) = A phi_x(k) + B phi_u(k), A phi_x(T) + B phi_u(T) = 0.
inline double achievability_residual(const LtiSystem& sys, const ClosedLoopMaps& cl) {
  if (cl.n() != sys.n || cl.m() != sys.m)
    throw std::invalid_argument("achievability_residual: dimension mismatch");
  const int T = cl.T();
  double acc = (cl.phi_x.at(1) - Eigen::MatrixXd::Identity(sys.n, sys.n)).squaredNorm();
  for (int k = 1; k < T; ++k)
    acc += (cl.phi_x.at(k + 1) - recursion_step(sys, cl.phi_x.at(k), cl.phi_u.at(k))).squaredNorm();
  acc += recursion_step(sys, cl.phi_x.at(T), cl.phi_u.at(T)).squaredNorm();
  return std::sqrt(acc);
}

struct ClSynthesisOutcome {
  bool feasible = false;
  ClosedLoopMaps maps;
};

namespace detail {

// Free entries of one column of a strictly proper pair whose leading square
// coefficient is pinned to the identity: R-type blocks k = 2..horizon at
// offsets (k-2)n, then M-type blocks k = 1..horizon at (horizon-1)n + (k-1)m.
// An optional mask deletes entries from the free set.
inline std::vector<int> free_column_indices(const SparsityMask* mask, int n, int m, int horizon,
                                            int col) {
  std::vector<int> ids;
  ids.reserve(static_cast<size_t>((horizon - 1) * n + horizon * m));
  for (int k = 2; k <= horizon; ++k)
    for (int i = 0; i < n; ++i)
      if (!mask || mask->pattern_R(k)(i, col)) ids.push_back((k - 2) * n + i);
  for (int k = 1; k <= horizon; ++k)
    for (int a = 0; a < m; ++a)
      if (!mask || mask->pattern_M(k)(a, col)) ids.push_back((horizon - 1) * n + (k - 1) * m + a);
  return ids;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& ids) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(ids.size()));
  for (size_t c = 0; c < ids.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(ids[c]);
  return out;
}

}  // namespace detail

// Minimizes sum_k (||Q^{1/2} phi_x(k)||_F^2 + ||R^{1/2} phi_u(k)||_F^2) over
// achievable FIR maps of horizon T, column by column through the KKT system of
// the equality-constrained least-squares problem. phi_x(1) = I is enforced
// structurally (those entries are not decision variables; any feasible map has
// them equal to the identity, so nothing is lost), which keeps the leading
// coefficient exact. Optional mask entries are pinned to exact zeros by
// variable deletion; infeasibility of the constraints restricted to the free
// entries is detected by a singular-value rank test with relative tolerance
// 1e-9.
inline ClSynthesisOutcome synthesize_clmaps(const LtiSystem& sys, int T, const LqrWeights& w,
                                            const SparsityMask* mask = nullptr) {
  if (T < 1) throw std::invalid_argument("synthesize_clmaps: T must be positive");
  const int n = sys.n, m = sys.m;
  if (w.Q.rows() != n || w.R.rows() != m)
    throw std::invalid_argument("synthesize_clmaps: weight dimension mismatch");
  if (mask) {
    mask->validate();
    if (mask->horizon < T || mask->n() != n || mask->m() != m)
      throw std::invalid_argument("synthesize_clmaps: mask must cover horizon T");
  }

  const int nv = (T - 1) * n + T * m;
  const int nc = n * T;
  auto x_off = [&](int k) { return (k - 2) * n; };
  auto u_off = [&](int k) { return (T - 1) * n + (k - 1) * m; };
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nv, nv);
  for (int k = 2; k <= T; ++k) W.block(x_off(k), x_off(k), n, n) = w.Q;
  for (int k = 1; k <= T; ++k) W.block(u_off(k), u_off(k), m, m) = w.R;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(nc, nv);
  for (int k = 1; k < T; ++k) {
    const int row = (k - 1) * n;
    E.block(row, x_off(k + 1), n, n) = Eigen::MatrixXd::Identity(n, n);
    if (k >= 2) E.block(row, x_off(k), n, n) = -sys.A;
    E.block(row, u_off(k), n, m) = -sys.B;
  }
  if (T >= 2) E.block((T - 1) * n, x_off(T), n, n) = sys.A;
  E.block((T - 1) * n, u_off(T), n, m) = sys.B;

  FirTransferMatrix phi_x(n, n, 1, T);
  FirTransferMatrix phi_u(m, n, 1, T);
  phi_x.at(1) = Eigen::MatrixXd::Identity(n, n);
  for (int col = 0; col < n; ++col) {
    const std::vector<int> free_ids = detail::free_column_indices(mask, n, m, T, col);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(nc);
    if (T >= 2) {
      f.head(n) = sys.A.col(col);
    } else {
      f.head(n) = -sys.A.col(col);
    }
    const Eigen::MatrixXd E_f = detail::select_columns(E, free_ids);
    const ConsistencyRanks ranks = consistency_ranks(E_f, f);
    if (!ranks.consistent()) return {};
    Eigen::MatrixXd W_f(free_ids.size(), free_ids.size());
    for (size_t r = 0; r < free_ids.size(); ++r)
      for (size_t c = 0; c < free_ids.size(); ++c) W_f(r, c) = W(free_ids[r], free_ids[c]);
    const Eigen::VectorXd v = equality_constrained_lsq(W_f, E_f, f);
    for (size_t idx = 0; idx < free_ids.size(); ++idx) {
      const int id = free_ids[idx];
      if (id < (T - 1) * n) {
        phi_x.at(id / n + 2)(id % n, col) = v(static_cast<Eigen::Index>(idx));
      } else {
        const int rem = id - (T - 1) * n;
        phi_u.at(rem / m + 1)(rem % m, col) = v(static_cast<Eigen::Index>(idx));
      }
    }
  }
  return {true, ClosedLoopMaps(std::move(phi_x), std::move(phi_u))};
}

struct ControllerClMaps {
  ClosedLoopMaps maps;
  double tail = 0.0;  // Frobenius norm of the discarded term (A + B K)^T
};

// Closed-loop maps achieved by the static state feedback u = K x:
// phi_x(k) = (A + B K)^{k-1}, phi_u(k) = K phi_x(k), truncated at T.
inline ControllerClMaps controller_to_clmaps(const Eigen::MatrixXd& k_gain, const LtiSystem& sys,
                                             int T) {
  if (T < 1) throw std::invalid_argument("controller_to_clmaps: T must be positive");
  if (k_gain.rows() != sys.m || k_gain.cols() != sys.n)
    throw std::invalid_argument("controller_to_clmaps: gain must be m x n");
  FirTransferMatrix phi_x(sys.n, sys.n, 1, T);
  FirTransferMatrix phi_u(sys.m, sys.n, 1, T);
  phi_x.at(1) = Eigen::MatrixXd::Identity(sys.n, sys.n);
  for (int k = 1; k <= T; ++k) {
    phi_u.at(k).noalias() = k_gain * phi_x.at(k);
    if (k < T) phi_x.at(k + 1) = recursion_step(sys, phi_x.at(k), phi_u.at(k));
  }
  const double tail = recursion_step(sys, phi_x.at(T), phi_u.at(T)).norm();
  return {ClosedLoopMaps(std::move(phi_x), std::move(phi_u)), tail};
}

// H2 cost under unit-covariance disturbances:
// sum_k trace(phi_x(k)' Q phi_x(k)) + trace(phi_u(k)' R phi_u(k)).
inline double lqr_cost(const ClosedLoopMaps& cl, const LqrWeights& w) {
  double acc = 0.0;
  for (int k = 1; k <= cl.T(); ++k) {
    acc += (w.Q * cl.phi_x.at(k)).cwiseProduct(cl.phi_x.at(k)).sum();
    acc += (w.R * cl.phi_u.at(k)).cwiseProduct(cl.phi_u.at(k)).sum();
  }
  return acc;
}

// Riccati fixed-point iteration for the infinite-horizon solution P.
inline Eigen::MatrixXd dare_solution(const LtiSystem& sys, const LqrWeights& w,
                                     double rel_tol = 1e-12, int max_iterations = 200000) {
  Eigen::MatrixXd P = w.Q;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd bpa = sys.B.transpose() * P * sys.A;
    const Eigen::MatrixXd gram = w.R + sys.B.transpose() * P * sys.B;
    const Eigen::MatrixXd P_next =
        w.Q + sys.A.transpose() * P * sys.A - bpa.transpose() * gram.ldlt().solve(bpa);
    const double increment = (P_next - P).norm();
    P = P_next;
    if (increment <= rel_tol * std::max(1.0, P.norm())) return P;
  }
  throw std::runtime_error("dare_solution: iteration cap exceeded (is (A, B) stabilizable?)");
}

// Optimal infinite-horizon LQR cost trace(P), the normalization baseline.
inline double dare_optimal_cost(const LtiSystem& sys, const LqrWeights& w) {
  return dare_solution(sys, w).trace();
}

}  // namespace sls
