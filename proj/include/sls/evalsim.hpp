#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sls/clsyn.hpp"
#include "sls/implsyn.hpp"
#include "sls/lti_core.hpp"
#include "sls/stability.hpp"

namespace sls {

// Closed-loop trajectory under the implemented controller; entry t of each
// list is the value at time t, with x[0] the zero initial state.
struct Trajectory {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> delta_hat;
  int horizon = 0;
};

// Runs the controller realization from zero initial state and zero internal
// history: delta_hat_t = x_t - sum_{k=2..T_c} R_c(k) delta_hat_{t-k+1},
// u_t = sum_{k=1..T_c} M_c(k) delta_hat_{t-k+1}, x_{t+1} = A x_t + B u_t + w_t.
inline Trajectory simulate_controller(const LtiSystem& sys, const ImplementationMatrices& impl,
                                      const std::vector<Eigen::VectorXd>& w, int horizon) {
  if (horizon < 1) throw std::invalid_argument("simulate_controller: horizon must be positive");
  if (impl.n() != sys.n || impl.m() != sys.m)
    throw std::invalid_argument("simulate_controller: dimension mismatch");
  if (static_cast<int>(w.size()) != horizon)
    throw std::invalid_argument("simulate_controller: disturbance must have `horizon` entries");
  for (const auto& wt : w)
    if (wt.size() != sys.n)
      throw std::invalid_argument("simulate_controller: disturbance entries must have dimension n");

  const int T_c = impl.T_c();
  Trajectory traj;
  traj.horizon = horizon;
  traj.x.reserve(static_cast<size_t>(horizon) + 1);
  traj.u.reserve(static_cast<size_t>(horizon) + 1);
  traj.delta_hat.reserve(static_cast<size_t>(horizon) + 1);
  traj.x.push_back(Eigen::VectorXd::Zero(sys.n));
  for (int t = 0; t <= horizon; ++t) {
    Eigen::VectorXd dh = traj.x[static_cast<size_t>(t)];
    for (int k = 2; k <= std::min(T_c, t + 1); ++k)
      dh -= impl.r_c.at(k) * traj.delta_hat[static_cast<size_t>(t - k + 1)];
    traj.delta_hat.push_back(std::move(dh));
    Eigen::VectorXd ut = Eigen::VectorXd::Zero(sys.m);
    for (int k = 1; k <= std::min(T_c, t + 1); ++k)
      ut += impl.m_c.at(k) * traj.delta_hat[static_cast<size_t>(t - k + 1)];
    traj.u.push_back(std::move(ut));
    if (t < horizon)
      traj.x.push_back(sys.A * traj.x[static_cast<size_t>(t)] + sys.B * traj.u[static_cast<size_t>(t)] +
                       w[static_cast<size_t>(t)]);
  }
  return traj;
}

struct EmpiricalMaps {
  ClosedLoopMaps maps;
  double tail_norm = 0.0;  // Frobenius norm of the final stacked coefficient
};

// Implemented closed-loop maps measured in the time domain: one unit-impulse
// simulation per disturbance channel, responses stacked as FIR coefficients.
inline EmpiricalMaps empirical_clmaps(const LtiSystem& sys, const ImplementationMatrices& impl,
                                      int horizon) {
  if (horizon < 1) throw std::invalid_argument("empirical_clmaps: horizon must be positive");
  FirTransferMatrix px(sys.n, sys.n, 1, horizon);
  FirTransferMatrix pu(sys.m, sys.n, 1, horizon);
  std::vector<Eigen::VectorXd> w(static_cast<size_t>(horizon), Eigen::VectorXd::Zero(sys.n));
  for (int j = 0; j < sys.n; ++j) {
    w[0] = Eigen::VectorXd::Unit(sys.n, j);
    const Trajectory traj = simulate_controller(sys, impl, w, horizon);
    for (int k = 1; k <= horizon; ++k) {
      px.at(k).col(j) = traj.x[static_cast<size_t>(k)];
      pu.at(k).col(j) = traj.u[static_cast<size_t>(k)];
    }
  }
  EmpiricalMaps out{ClosedLoopMaps(px, pu), 0.0};
  out.tail_norm =
      std::sqrt(px.at(horizon).squaredNorm() + pu.at(horizon).squaredNorm());
  return out;
}

// LQR cost of the implemented controller over a horizon long enough for the
// impulse responses to decay, normalized by the infinite-horizon optimum.
// The horizon doubles adaptively from the given start up to 10x.
inline double normalized_lqr_cost(const LtiSystem& sys, const ImplementationMatrices& impl,
                                  const LqrWeights& w, int horizon) {
  if (horizon < 1) throw std::invalid_argument("normalized_lqr_cost: horizon must be positive");
  if (spectral_radius(build_internal_dynamics(sys, impl).A_z) >= 1.0)
    throw std::runtime_error("normalized_lqr_cost: internal dynamics are unstable");
  int eval = horizon;
  EmpiricalMaps em = empirical_clmaps(sys, impl, eval);
  while (em.tail_norm >= 1e-8 && eval < 10 * horizon) {
    eval = std::min(2 * eval, 10 * horizon);
    em = empirical_clmaps(sys, impl, eval);
  }
  if (em.tail_norm >= 1e-8)
    throw std::runtime_error(
        "normalized_lqr_cost: impulse-response tail has not decayed at the horizon cap");
  return lqr_cost(em.maps, w) / dare_optimal_cost(sys, w);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.x.empty() ? 0 : static_cast<int>(traj.x.front().size());
  const int m = traj.u.empty() ? 0 : static_cast<int>(traj.u.front().size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int a = 1; a <= m; ++a) os << ",u" << a;
  os << "\n" << std::setprecision(17);
  for (size_t t = 0; t < traj.x.size(); ++t) {
    os << t;
    for (int i = 0; i < n; ++i) os << "," << traj.x[t](i);
    for (int a = 0; a < m; ++a) os << "," << traj.u[t](a);
    os << "\n";
  }
}

inline void write_trajectory_csv_file(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_trajectory_csv(os, traj);
}

}  // namespace sls
