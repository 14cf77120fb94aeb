#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sls {

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

inline int rank_with_tol(const Eigen::VectorXd& svals, double tol) {
  int r = 0;
  for (Eigen::Index i = 0; i < svals.size(); ++i)
    if (svals(i) > tol) ++r;
  return r;
}

// Rank comparison for consistency of A x = b (b may have several columns).
// Both ranks use the same absolute threshold tol_rel * sigma_max([A | b]).
struct ConsistencyRanks {
  int rank_a = 0;
  int rank_ab = 0;
  double tol = 0.0;
  bool consistent() const { return rank_a == rank_ab; }
};

inline ConsistencyRanks consistency_ranks(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                          double tol_rel = 1e-9) {
  if (a.rows() != b.rows()) throw std::invalid_argument("consistency_ranks: row count mismatch");
  Eigen::MatrixXd aug(a.rows(), a.cols() + b.cols());
  aug << a, b;
  const Eigen::VectorXd sv_aug = singular_values(aug);
  const double smax = sv_aug.size() > 0 ? sv_aug(0) : 0.0;
  ConsistencyRanks out;
  out.tol = tol_rel * smax;
  out.rank_a = rank_with_tol(singular_values(a), out.tol);
  out.rank_ab = rank_with_tol(sv_aug, out.tol);
  return out;
}

// Minimum-norm least-squares solution of A X = B via a rank-revealing
// complete orthogonal decomposition.
inline Eigen::MatrixXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("min_norm_solve: row count mismatch");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.solve(b);
}

// Orthonormal basis of the null space of A (columns), threshold tol on singular values.
inline Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& a, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const int r = rank_with_tol(sv, tol);
  const int nullity = static_cast<int>(a.cols()) - r;
  if (nullity <= 0) return Eigen::MatrixXd::Zero(a.cols(), 0);
  return svd.matrixV().rightCols(nullity);
}

// Solves min_v v' W v subject to E v = f through the KKT saddle system
//   [2W  E'] [v ]   [0]
//   [E   0 ] [nu] = [f],
// factorized with a rank-revealing decomposition so redundant constraints and
// singular W are handled; f may carry several right-hand-side columns.
inline Eigen::MatrixXd equality_constrained_lsq(const Eigen::MatrixXd& w, const Eigen::MatrixXd& e,
                                                const Eigen::MatrixXd& f) {
  const Eigen::Index nv = e.cols();
  const Eigen::Index nc = e.rows();
  if (w.rows() != nv || w.cols() != nv)
    throw std::invalid_argument("equality_constrained_lsq: W shape mismatch");
  if (f.rows() != nc) throw std::invalid_argument("equality_constrained_lsq: f shape mismatch");
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
  kkt.topLeftCorner(nv, nv) = 2.0 * w;
  kkt.topRightCorner(nv, nc) = e.transpose();
  kkt.bottomLeftCorner(nc, nv) = e;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nv + nc, f.cols());
  rhs.bottomRows(nc) = f;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
  return cod.solve(rhs).topRows(nv);
}

// Deterministic power iteration for the largest eigenvalue of a symmetric
// positive semidefinite matrix.
inline double power_iteration_lmax(const Eigen::MatrixXd& h, int iters = 100) {
  if (h.rows() != h.cols()) throw std::invalid_argument("power_iteration_lmax: matrix must be square");
  const Eigen::Index n = h.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd hv = h * v;
    const double nrm = hv.norm();
    if (nrm <= 0.0) return 0.0;
    v = hv / nrm;
    lambda = v.dot(h * v);
  }
  return lambda;
}

}  // namespace sls
