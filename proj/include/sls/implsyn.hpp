#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sls/clsyn.hpp"
#include "sls/linalg.hpp"
#include "sls/lti_core.hpp"
#include "sls/sparsity.hpp"

namespace sls {

// Controller implementation pair: R_c acts on the internal signal, M_c produces
// the control; both strictly proper FIR with horizon T_c and R_c(1) = I.
struct ImplementationMatrices {
  FirTransferMatrix r_c;
  FirTransferMatrix m_c;

  ImplementationMatrices() = default;
  ImplementationMatrices(FirTransferMatrix r, FirTransferMatrix m)
      : r_c(std::move(r)), m_c(std::move(m)) {
    r_c.validate();
    m_c.validate();
    if (r_c.rows != r_c.cols) throw std::invalid_argument("ImplementationMatrices: R_c must be square");
    if (m_c.cols != r_c.cols) throw std::invalid_argument("ImplementationMatrices: column mismatch");
    if (r_c.start != 1 || m_c.start != 1)
      throw std::invalid_argument("ImplementationMatrices: matrices must be strictly proper (start 1)");
    if (r_c.horizon != m_c.horizon)
      throw std::invalid_argument("ImplementationMatrices: matrices must share one horizon");
    if ((r_c.at(1) - Eigen::MatrixXd::Identity(r_c.rows, r_c.rows)).cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("ImplementationMatrices: R_c(1) must equal the identity exactly");
  }

  int n() const { return r_c.rows; }
  int m() const { return m_c.rows; }
  int T_c() const { return r_c.horizon; }
};

// Helper transfer matrix Delta_c = [zI - A, -B] [R_c; M_c]; Delta_c(0) = R_c(1) = I
// and Delta = Delta_c - I measures the deviation from exact achievability.
struct DeltaC {
  FirTransferMatrix delta_c;

  DeltaC() = default;
  explicit DeltaC(FirTransferMatrix d) : delta_c(std::move(d)) {
    delta_c.validate();
    if (delta_c.rows != delta_c.cols || delta_c.start != 0)
      throw std::invalid_argument("DeltaC: must be square with start 0");
  }

  int n() const { return delta_c.rows; }
  int T_c() const { return delta_c.horizon; }

  // Strictly proper part Delta = Delta_c - I (the z^0 term I is dropped).
  FirTransferMatrix delta() const {
    FirTransferMatrix out(delta_c.rows, delta_c.cols, 1, std::max(1, delta_c.horizon));
    for (int k = 1; k <= delta_c.horizon; ++k) out.at(k) = delta_c.at(k);
    return out;
  }
};

inline DeltaC compute_delta_c(const LtiSystem& sys, const ImplementationMatrices& impl) {
  if (impl.n() != sys.n || impl.m() != sys.m)
    throw std::invalid_argument("compute_delta_c: dimension mismatch");
  const int T_c = impl.T_c();
  FirTransferMatrix d(sys.n, sys.n, 0, T_c);
  d.at(0) = impl.r_c.at(1);
  for (int j = 1; j < T_c; ++j)
    d.at(j) = impl.r_c.at(j + 1) - recursion_step(sys, impl.r_c.at(j), impl.m_c.at(j));
  d.at(T_c) = -recursion_step(sys, impl.r_c.at(T_c), impl.m_c.at(T_c));
  return DeltaC(std::move(d));
}

// H2 norm of [R_c; M_c] - [phi_x; phi_u] Delta_c over spectral indices
// 1..T + T_c; zero exactly when (R_c, M_c) implement (phi_x, phi_u).
inline double constraint_residual(const ClosedLoopMaps& cl, const ImplementationMatrices& impl,
                                  const LtiSystem& sys) {
  if (cl.n() != sys.n || cl.m() != sys.m || impl.n() != sys.n || impl.m() != sys.m)
    throw std::invalid_argument("constraint_residual: dimension mismatch");
  const DeltaC dc = compute_delta_c(sys, impl);
  const FirTransferMatrix stacked = fir_vstack(impl.r_c, impl.m_c);
  const FirTransferMatrix target = fir_multiply(fir_vstack(cl.phi_x, cl.phi_u), dc.delta_c);
  return norm_h2(fir_subtract(stacked, target));
}

struct FeasibilityReport {
  int rank_F = 0;
  int rank_FG = 0;
  bool feasible = false;
  int nullity = 0;
  int solution_dim = 0;  // nullity x n
};

// Linear system F v = G of the implementation constraint for one column of the
// maps: v stacks [R_c(2..T_c); M_c(1..T_c)] entries of that column, F is shared
// across columns, and G carries one right-hand side per state column.
struct FgSystem {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  int n = 0;
  int m = 0;
  int T = 0;
  int T_c = 0;

  int nv() const { return (T_c - 1) * n + T_c * m; }
};

inline FgSystem build_F_G(const LtiSystem& sys, const ClosedLoopMaps& cl, int T_c) {
  if (T_c < 1) throw std::invalid_argument("build_F_G: T_c must be positive");
  if (cl.n() != sys.n || cl.m() != sys.m)
    throw std::invalid_argument("build_F_G: dimension mismatch");
  const int n = sys.n, m = sys.m, T = cl.T();
  const int nb = n + m;
  const int n_rows = (T + T_c) * nb;
  const int nv = (T_c - 1) * n + T_c * m;

  auto p_block = [&](int k) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nb, n);
    if (k >= 1 && k <= T) {
      p.topRows(n) = cl.phi_x.at(k);
      p.bottomRows(m) = cl.phi_u.at(k);
    }
    return p;
  };
  auto r_col = [&](int s) { return (s - 2) * n; };
  auto m_col = [&](int s) { return (T_c - 1) * n + (s - 1) * m; };

  FgSystem fg;
  fg.n = n;
  fg.m = m;
  fg.T = T;
  fg.T_c = T_c;
  fg.F = Eigen::MatrixXd::Zero(n_rows, nv);
  fg.G = Eigen::MatrixXd::Zero(n_rows, n);
  for (int k = 1; k <= T + T_c; ++k) {
    const int row = (k - 1) * nb;
    if (k >= 2 && k <= T_c)
      fg.F.block(row, r_col(k), n, n) += Eigen::MatrixXd::Identity(n, n);
    if (k <= T_c)
      fg.F.block(row + n, m_col(k), m, m) += Eigen::MatrixXd::Identity(m, m);
    for (int s = 2; s <= T_c; ++s) {
      if (k - s + 1 >= 1 && k - s + 1 <= T) fg.F.block(row, r_col(s), nb, n) -= p_block(k - s + 1);
      if (k - s >= 1 && k - s <= T) fg.F.block(row, r_col(s), nb, n) += p_block(k - s) * sys.A;
    }
    for (int s = 1; s <= T_c; ++s)
      if (k - s >= 1 && k - s <= T) fg.F.block(row, m_col(s), nb, m) += p_block(k - s) * sys.B;
    Eigen::MatrixXd g = p_block(k) - p_block(k - 1) * sys.A;
    if (k == 1) g.topRows(n) -= Eigen::MatrixXd::Identity(n, n);
    fg.G.middleRows(row, nb) = g;
  }
  return fg;
}

// Consistency of F v = G by rank comparison (singular values, relative
// tolerance 1e-9 against the largest singular value of [F | G]).
inline FeasibilityReport check_feasibility(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G) {
  const ConsistencyRanks ranks = consistency_ranks(F, G);
  FeasibilityReport rep;
  rep.rank_F = ranks.rank_a;
  rep.rank_FG = ranks.rank_ab;
  rep.feasible = ranks.consistent();
  rep.nullity = static_cast<int>(F.cols()) - rep.rank_F;
  rep.solution_dim = rep.nullity * static_cast<int>(G.cols());
  return rep;
}

inline FeasibilityReport check_feasibility(const FgSystem& fg) {
  return check_feasibility(fg.F, fg.G);
}

namespace detail {

inline ImplementationMatrices impl_from_columns(const std::vector<Eigen::VectorXd>& vs,
                                                const std::vector<std::vector<int>>& free_ids,
                                                int n, int m, int T_c) {
  FirTransferMatrix r_c(n, n, 1, T_c);
  FirTransferMatrix m_c(m, n, 1, T_c);
  r_c.at(1) = Eigen::MatrixXd::Identity(n, n);
  for (int col = 0; col < n; ++col) {
    const auto& ids = free_ids[static_cast<size_t>(col)];
    const auto& v = vs[static_cast<size_t>(col)];
    for (size_t idx = 0; idx < ids.size(); ++idx) {
      const int id = ids[idx];
      if (id < (T_c - 1) * n) {
        r_c.at(id / n + 2)(id % n, col) = v(static_cast<Eigen::Index>(idx));
      } else {
        const int rem = id - (T_c - 1) * n;
        m_c.at(rem / m + 1)(rem % m, col) = v(static_cast<Eigen::Index>(idx));
      }
    }
  }
  return ImplementationMatrices(std::move(r_c), std::move(m_c));
}

// Affine map from v to the strictly proper Delta: Delta column = D v - d_const
// column, blocks d = 1..T_c of n rows each.
inline Eigen::MatrixXd build_delta_operator(const LtiSystem& sys, int T_c) {
  const int n = sys.n, m = sys.m;
  const int nv = (T_c - 1) * n + T_c * m;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(T_c * n, nv);
  auto r_col = [&](int s) { return (s - 2) * n; };
  auto m_col = [&](int s) { return (T_c - 1) * n + (s - 1) * m; };
  for (int d = 1; d <= T_c; ++d) {
    const int row = (d - 1) * n;
    if (d < T_c) D.block(row, r_col(d + 1), n, n) += Eigen::MatrixXd::Identity(n, n);
    if (d >= 2) D.block(row, r_col(d), n, n) -= sys.A;
    D.block(row, m_col(d), n, m) -= sys.B;
  }
  return D;
}

inline Eigen::MatrixXd build_delta_const(const LtiSystem& sys, int T_c) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T_c * sys.n, sys.n);
  d.topRows(sys.n) = sys.A;
  return d;
}

inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, const Eigen::VectorXd& thr) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i)) - thr(i);
    out(i) = mag > 0.0 ? (v(i) > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

// Projection of v onto { x : ||D x - d|| <= radius } through the secular
// equation x(mu) = (I + mu D'D)^{-1} (v + mu D'd), bisected on mu >= 0 with a
// precomputed eigendecomposition of D'D.
struct BallProjector {
  Eigen::MatrixXd D;
  Eigen::VectorXd d;
  double radius = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;

  BallProjector(Eigen::MatrixXd D_in, Eigen::VectorXd d_in, double radius_in)
      : D(std::move(D_in)), d(std::move(d_in)), radius(radius_in),
        eig(Eigen::MatrixXd(D.transpose() * D)) {}

  Eigen::VectorXd solve_at(double mu, const Eigen::VectorXd& rhs) const {
    const Eigen::VectorXd scaled =
        (eig.eigenvalues().array() * mu + 1.0).inverse().matrix().asDiagonal() *
        (eig.eigenvectors().transpose() * rhs);
    return eig.eigenvectors() * scaled;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const {
    if ((D * v - d).norm() <= radius) return v;
    const Eigen::VectorXd dtd = D.transpose() * d;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60 && (D * solve_at(hi, v + hi * dtd) - d).norm() > radius; ++it) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((D * solve_at(mid, v + mid * dtd) - d).norm() > radius) lo = mid; else hi = mid;
    }
    return solve_at(hi, v + hi * dtd);
  }
};

}  // namespace detail

struct ImplSynthesisOptions {
  double lambda = 0.0;             // weight of ||Delta||_H2^2
  double l1_weight = 0.0;          // uniform entrywise l1 weight on (R_c, M_c)
  const SparsityMask* mask = nullptr;
  const PenaltyWeights* penalties = nullptr;
  int max_iterations = 5000;
  double rel_tol = 1e-9;           // relative objective decrease for termination
  bool delta_ball = false;         // project Delta onto an H2 ball instead
  double delta_ball_radius = 0.9;
};

struct ImplSynthesisDiagnostics {
  double objective = 0.0;
  double delta_norm_h2 = 0.0;
  int iterations = 0;
  bool hit_iteration_cap = false;
  std::vector<std::vector<double>> objective_history;  // one sequence per column
};

struct ImplSynthesisResult {
  ImplementationMatrices impl;
  DeltaC delta_c;
  ImplSynthesisDiagnostics diagnostics;
};

struct ExactSolveOutcome {
  bool feasible = false;
  ImplementationMatrices impl;
};

// Minimum-norm solution of F v = G per column; masked entries are pinned to
// exact zeros by column deletion, and per-column inconsistency of the reduced
// system reports Infeasible.
inline ExactSolveOutcome solve_exact(const FgSystem& fg, const SparsityMask* mask = nullptr) {
  if (mask) {
    mask->validate();
    if (mask->horizon < fg.T_c || mask->n() != fg.n || mask->m() != fg.m)
      throw std::invalid_argument("solve_exact: mask must cover horizon T_c");
  }
  std::vector<Eigen::VectorXd> vs;
  std::vector<std::vector<int>> free_ids;
  for (int col = 0; col < fg.n; ++col) {
    free_ids.push_back(detail::free_column_indices(mask, fg.n, fg.m, fg.T_c, col));
    const Eigen::MatrixXd F_s = detail::select_columns(fg.F, free_ids.back());
    const Eigen::VectorXd g = fg.G.col(col);
    if (!consistency_ranks(F_s, g).consistent()) return {};
    vs.push_back(min_norm_solve(F_s, g));
  }
  return {true, detail::impl_from_columns(vs, free_ids, fg.n, fg.m, fg.T_c)};
}

// Relaxed synthesis: per column of the maps, minimizes
//   ||F v - G_j||^2 + lambda ||D v - d_j||^2 + sum_e w_e |v_e|
// (the squared-H2 translation of the regularized objective, with Delta
// eliminated through its affine dependence on v) by a monotone accelerated
// proximal-gradient scheme with soft-thresholding; per-entry weights combine
// l1_weight and the optional penalty tensors, masked entries are deleted, and
// the optional Delta-ball variant projects each column onto
// ||Delta column|| <= delta_ball_radius / sqrt(n) after the proximal step.
inline ImplSynthesisResult synthesize_implementation(const LtiSystem& sys, const ClosedLoopMaps& cl,
                                                     int T_c,
                                                     const ImplSynthesisOptions& opts = {}) {
  if (opts.lambda < 0.0 || opts.l1_weight < 0.0)
    throw std::invalid_argument("synthesize_implementation: weights must be nonnegative");
  if (opts.mask) {
    opts.mask->validate();
    if (opts.mask->horizon < T_c || opts.mask->n() != sys.n || opts.mask->m() != sys.m)
      throw std::invalid_argument("synthesize_implementation: mask must cover horizon T_c");
  }
  if (opts.penalties &&
      (opts.penalties->horizon < T_c ||
       opts.penalties->weights_R[0].rows() != sys.n || opts.penalties->weights_M[0].rows() != sys.m))
    throw std::invalid_argument("synthesize_implementation: penalty tensors must cover horizon T_c");

  const FgSystem fg = build_F_G(sys, cl, T_c);
  const Eigen::MatrixXd D = detail::build_delta_operator(sys, T_c);
  const Eigen::MatrixXd d_const = detail::build_delta_const(sys, T_c);

  ImplSynthesisDiagnostics diag;
  std::vector<Eigen::VectorXd> vs;
  std::vector<std::vector<int>> free_ids;
  double delta_sq = 0.0;
  for (int col = 0; col < sys.n; ++col) {
    free_ids.push_back(detail::free_column_indices(opts.mask, sys.n, sys.m, T_c, col));
    const auto& ids = free_ids.back();
    const Eigen::MatrixXd F_s = detail::select_columns(fg.F, ids);
    const Eigen::MatrixXd D_s = detail::select_columns(D, ids);
    const Eigen::VectorXd g = fg.G.col(col);
    const Eigen::VectorXd dc = d_const.col(col);

    Eigen::VectorXd weights(static_cast<Eigen::Index>(ids.size()));
    for (size_t idx = 0; idx < ids.size(); ++idx) {
      const int id = ids[idx];
      double w = opts.l1_weight;
      if (opts.penalties) {
        if (id < (T_c - 1) * sys.n) {
          w += opts.penalties->weights_R[static_cast<size_t>(id / sys.n + 1)](id % sys.n, col);
        } else {
          const int rem = id - (T_c - 1) * sys.n;
          w += opts.penalties->weights_M[static_cast<size_t>(rem / sys.m)](rem % sys.m, col);
        }
      }
      weights(static_cast<Eigen::Index>(idx)) = w;
    }

    const Eigen::MatrixXd H =
        2.0 * (F_s.transpose() * F_s + opts.lambda * (D_s.transpose() * D_s));
    const Eigen::VectorXd b = 2.0 * (F_s.transpose() * g + opts.lambda * (D_s.transpose() * dc));
    const double c0 = g.squaredNorm() + opts.lambda * dc.squaredNorm();
    auto smooth = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(H * x) - b.dot(x) + c0; };
    auto objective = [&](const Eigen::VectorXd& x) {
      return smooth(x) + weights.dot(x.cwiseAbs());
    };

    // Warm start at the minimum-norm solution of the stacked least-squares
    // system, the exact optimum of the smooth part.
    Eigen::VectorXd v0;
    if (opts.lambda > 0.0) {
      const double sq = std::sqrt(opts.lambda);
      Eigen::MatrixXd stacked(F_s.rows() + D_s.rows(), static_cast<Eigen::Index>(ids.size()));
      stacked << F_s, sq * D_s;
      Eigen::VectorXd rhs(F_s.rows() + D_s.rows());
      rhs << g, sq * dc;
      v0 = min_norm_solve(stacked, rhs);
    } else {
      v0 = min_norm_solve(F_s, g);
    }

    const double lmax = power_iteration_lmax(H);
    double step = 1.0 / std::max(lmax * 1.02, 1e-12);

    detail::BallProjector* proj = nullptr;
    detail::BallProjector proj_storage(D_s, dc,
                                       opts.delta_ball_radius / std::sqrt(static_cast<double>(sys.n)));
    if (opts.delta_ball) proj = &proj_storage;

    Eigen::VectorXd x_prev = proj ? proj->project(v0) : v0;
    double obj_prev = objective(x_prev);
    std::vector<double> history{obj_prev};
    Eigen::VectorXd y = x_prev;
    double t = 1.0;
    int iters = 0;
    bool capped = true;
    for (int it = 1; it <= opts.max_iterations; ++it) {
      const Eigen::VectorXd grad = H * y - b;
      Eigen::VectorXd z = detail::soft_threshold(y - step * grad, step * weights);
      if (proj) z = proj->project(z);
      // Backtracking guard in case the power-iteration Lipschitz estimate is low.
      for (int bt = 0; bt < 50; ++bt) {
        const Eigen::VectorXd diff = z - y;
        if (smooth(z) <=
            smooth(y) + grad.dot(diff) + 0.5 / step * diff.squaredNorm() + 1e-12)
          break;
        step *= 0.5;
        z = detail::soft_threshold(y - step * grad, step * weights);
        if (proj) z = proj->project(z);
      }
      const double obj_z = objective(z);
      Eigen::VectorXd x_new;
      double obj_new;
      if (obj_z <= obj_prev) {
        x_new = z;
        obj_new = obj_z;
      } else {
        x_new = x_prev;
        obj_new = obj_prev;
      }
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x_prev);
      history.push_back(obj_new);
      const bool converged = (obj_prev - obj_new) <= opts.rel_tol * std::max(obj_prev, 1e-30);
      x_prev = std::move(x_new);
      obj_prev = obj_new;
      t = t_new;
      iters = it;
      if (converged) {
        capped = false;
        break;
      }
    }
    diag.objective += obj_prev;
    diag.iterations = std::max(diag.iterations, iters);
    diag.hit_iteration_cap = diag.hit_iteration_cap || capped;
    diag.objective_history.push_back(std::move(history));
    delta_sq += (D_s * x_prev - dc).squaredNorm();
    vs.push_back(std::move(x_prev));
  }
  diag.delta_norm_h2 = std::sqrt(delta_sq);

  ImplSynthesisResult out;
  out.impl = detail::impl_from_columns(vs, free_ids, sys.n, sys.m, T_c);
  out.delta_c = compute_delta_c(sys, out.impl);
  out.diagnostics = std::move(diag);
  return out;
}

using StabilityChecker = std::function<bool(const LtiSystem&, const ImplementationMatrices&)>;

struct LambdaScheduleResult {
  bool certified = false;
  ImplSynthesisResult synthesis;
  double lambda_used = 0.0;
  int escalations = 0;
};

// Escalating regularization: solve at start_lambda, re-solve with lambda
// multiplied by factor whenever the caller's stability check rejects the
// result, up to max_escalations escalations.
inline LambdaScheduleResult lambda_schedule(const LtiSystem& sys, const ClosedLoopMaps& cl, int T_c,
                                            const ImplSynthesisOptions& base, double start_lambda,
                                            double factor, const StabilityChecker& checker,
                                            int max_escalations = 8) {
  if (factor <= 1.0) throw std::invalid_argument("lambda_schedule: factor must exceed 1");
  if (start_lambda < 0.0) throw std::invalid_argument("lambda_schedule: start_lambda must be >= 0");
  if (!checker) throw std::invalid_argument("lambda_schedule: checker is required");
  LambdaScheduleResult out;
  double lambda = start_lambda;
  for (int esc = 0; esc <= max_escalations; ++esc) {
    ImplSynthesisOptions opts = base;
    opts.lambda = lambda;
    out.synthesis = synthesize_implementation(sys, cl, T_c, opts);
    out.lambda_used = lambda;
    out.escalations = esc;
    if (checker(sys, out.synthesis.impl)) {
      out.certified = true;
      return out;
    }
    lambda *= factor;
  }
  return out;
}

struct ImplementedMaps {
  FirTransferMatrix phi_x_tilde;
  FirTransferMatrix phi_u_tilde;
  double tail_norm = 0.0;  // Frobenius norm of the last kept Delta_c^{-1} coefficient
};

// Implemented closed-loop maps [R_c; M_c] Delta_c^{-1} through truncated FIR
// inversion, evaluated out to eval_horizon.
inline ImplementedMaps implemented_clmaps(const LtiSystem& sys, const ImplementationMatrices& impl,
                                          int eval_horizon) {
  if (eval_horizon < 1) throw std::invalid_argument("implemented_clmaps: horizon must be positive");
  const DeltaC dc = compute_delta_c(sys, impl);
  const FirTransferMatrix inv = fir_inverse_truncated(dc.delta_c, eval_horizon);
  ImplementedMaps out;
  out.tail_norm = inv.at(eval_horizon).norm();
  out.phi_x_tilde = fir_truncated(fir_multiply(impl.r_c, inv), eval_horizon);
  out.phi_u_tilde = fir_truncated(fir_multiply(impl.m_c, inv), eval_horizon);
  return out;
}

inline int default_eval_horizon(int T, int T_c) { return 4 * (T + T_c); }

struct ClosedLoopDifference {
  double dx = 0.0;
  double du = 0.0;
};

// Normalized H2 distance between the implemented and the desired maps,
// dx = ||phi_x_tilde - phi_x|| / ||phi_x|| and analogously for du. The
// evaluation horizon doubles adaptively from the given start up to 10x until
// the inverse tail has decayed below 1e-8.
inline ClosedLoopDifference closed_loop_difference(const ClosedLoopMaps& cl,
                                                   const ImplementationMatrices& impl,
                                                   const LtiSystem& sys, int eval_horizon) {
  int eval = eval_horizon;
  ImplementedMaps maps = implemented_clmaps(sys, impl, eval);
  while (maps.tail_norm >= 1e-8 && eval < 10 * eval_horizon) {
    eval = std::min(2 * eval, 10 * eval_horizon);
    maps = implemented_clmaps(sys, impl, eval);
  }
  if (maps.tail_norm >= 1e-8)
    throw std::runtime_error(
        "closed_loop_difference: Delta_c^{-1} tail has not decayed at the horizon cap "
        "(unstable implementation or horizon too short)");
  return {norm_h2(fir_subtract(maps.phi_x_tilde, cl.phi_x)) / norm_h2(cl.phi_x),
          norm_h2(fir_subtract(maps.phi_u_tilde, cl.phi_u)) / norm_h2(cl.phi_u)};
}

}  // namespace sls
