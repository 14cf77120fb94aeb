#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <vector>

#include "sls/evalsim.hpp"
#include "test_helpers.hpp"

using namespace sls;
using sls::testing::random_stable_implementation;
using sls::testing::random_stable_system;
using sls::testing::test_rng;

namespace {

std::vector<Eigen::VectorXd> zero_disturbance(int n, int horizon) {
  return std::vector<Eigen::VectorXd>(static_cast<size_t>(horizon), Eigen::VectorXd::Zero(n));
}

std::vector<Eigen::VectorXd> impulse_disturbance(int n, int horizon, int channel, int at_time = 0) {
  auto w = zero_disturbance(n, horizon);
  w[static_cast<size_t>(at_time)](channel) = 1.0;
  return w;
}

}  // namespace

TEST_CASE("simulate_controller validates its inputs") {
  auto rng = test_rng(601);
  const LtiSystem sys = random_stable_system(rng, 3, 2);
  const ImplementationMatrices impl = random_stable_implementation(rng, sys, 3);

  REQUIRE_THROWS_AS(simulate_controller(sys, impl, zero_disturbance(3, 4), 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(simulate_controller(sys, impl, zero_disturbance(3, 4), 5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(simulate_controller(sys, impl, zero_disturbance(2, 4), 4),
                    std::invalid_argument);

  const LtiSystem other = random_stable_system(rng, 4, 2);
  REQUIRE_THROWS_AS(simulate_controller(other, impl, zero_disturbance(4, 4), 4),
                    std::invalid_argument);
}

TEST_CASE("zero disturbances keep the loop at rest") {
  auto rng = test_rng(602);
  const LtiSystem sys = random_stable_system(rng, 3, 2);
  const ImplementationMatrices impl = random_stable_implementation(rng, sys, 3);
  const Trajectory traj = simulate_controller(sys, impl, zero_disturbance(3, 6), 6);

  REQUIRE(traj.horizon == 6);
  REQUIRE(traj.x.size() == 7);
  REQUIRE(traj.u.size() == 7);
  REQUIRE(traj.delta_hat.size() == 7);
  for (int t = 0; t <= 6; ++t) {
    REQUIRE(traj.x[static_cast<size_t>(t)].isZero(0.0));
    REQUIRE(traj.u[static_cast<size_t>(t)].isZero(0.0));
    REQUIRE(traj.delta_hat[static_cast<size_t>(t)].isZero(0.0));
  }
}

TEST_CASE("impulse responses of the self-implementation reproduce the designed maps") {
  auto rng = test_rng(603);
  const LtiSystem sys = random_stable_system(rng, 3, 2);
  const ClSynthesisOutcome out = synthesize_clmaps(sys, 5, LqrWeights::identity(3, 2));
  REQUIRE(out.feasible);
  const ImplementationMatrices self(out.maps.phi_x, out.maps.phi_u);

  const int horizon = 12;
  for (int j = 0; j < 3; ++j) {
    const Trajectory traj =
        simulate_controller(sys, self, impulse_disturbance(3, horizon, j), horizon);
    REQUIRE(traj.x[0].isZero(0.0));
    REQUIRE(traj.u[0].isZero(0.0));
    for (int t = 1; t <= horizon; ++t) {
      const Eigen::VectorXd x_ref =
          t <= 5 ? Eigen::VectorXd(out.maps.phi_x.at(t).col(j)) : Eigen::VectorXd::Zero(3).eval();
      const Eigen::VectorXd u_ref =
          t <= 5 ? Eigen::VectorXd(out.maps.phi_u.at(t).col(j)) : Eigen::VectorXd::Zero(2).eval();
      REQUIRE((traj.x[static_cast<size_t>(t)] - x_ref).cwiseAbs().maxCoeff() < 1e-9);
      REQUIRE((traj.u[static_cast<size_t>(t)] - u_ref).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("time-domain responses match the truncated-inversion maps") {
  auto rng = test_rng(604);
  for (int trial = 0; trial < 5; ++trial) {
    const LtiSystem sys = random_stable_system(rng, 3, 2);
    const ImplementationMatrices impl = random_stable_implementation(rng, sys, 4);
    const int horizon = 30;

    const EmpiricalMaps measured = empirical_clmaps(sys, impl, horizon);
    const ImplementedMaps formula = implemented_clmaps(sys, impl, horizon);

    for (int k = 1; k <= horizon; ++k) {
      REQUIRE((measured.maps.phi_x.at(k) - formula.phi_x_tilde.at(k)).cwiseAbs().maxCoeff() <
              1e-8);
      REQUIRE((measured.maps.phi_u.at(k) - formula.phi_u_tilde.at(k)).cwiseAbs().maxCoeff() <
              1e-8);
    }
    REQUIRE(measured.tail_norm < 1e-6);
  }
}

TEST_CASE("simulation is linear and time invariant") {
  auto rng = test_rng(605);
  const LtiSystem sys = random_stable_system(rng, 3, 2);
  const ImplementationMatrices impl = random_stable_implementation(rng, sys, 3);
  const int horizon = 10;

  auto w_a = zero_disturbance(3, horizon);
  auto w_b = zero_disturbance(3, horizon);
  auto w_sum = zero_disturbance(3, horizon);
  for (int t = 0; t < horizon; ++t) {
    w_a[static_cast<size_t>(t)] = sls::testing::random_matrix(rng, 3, 1);
    w_b[static_cast<size_t>(t)] = sls::testing::random_matrix(rng, 3, 1);
    w_sum[static_cast<size_t>(t)] = w_a[static_cast<size_t>(t)] + w_b[static_cast<size_t>(t)];
  }
  const Trajectory ta = simulate_controller(sys, impl, w_a, horizon);
  const Trajectory tb = simulate_controller(sys, impl, w_b, horizon);
  const Trajectory ts = simulate_controller(sys, impl, w_sum, horizon);
  for (int t = 0; t <= horizon; ++t) {
    const size_t s = static_cast<size_t>(t);
    REQUIRE((ts.x[s] - ta.x[s] - tb.x[s]).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((ts.u[s] - ta.u[s] - tb.u[s]).cwiseAbs().maxCoeff() < 1e-9);
  }

  const Trajectory now = simulate_controller(sys, impl, impulse_disturbance(3, horizon, 1), horizon);
  const Trajectory later =
      simulate_controller(sys, impl, impulse_disturbance(3, horizon, 1, 2), horizon);
  for (int t = 0; t + 2 <= horizon; ++t) {
    const size_t s = static_cast<size_t>(t);
    REQUIRE((later.x[s + 2] - now.x[s]).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((later.u[s + 2] - now.u[s]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("normalized_lqr_cost agrees with the map-space cost for self-implementations") {
  auto rng = test_rng(606);
  const LtiSystem sys = random_stable_system(rng, 3, 2);
  const LqrWeights w = LqrWeights::identity(3, 2);
  const int T = 12;
  const ClSynthesisOutcome out = synthesize_clmaps(sys, T, w);
  REQUIRE(out.feasible);
  const ImplementationMatrices self(out.maps.phi_x, out.maps.phi_u);

  const double from_sim = normalized_lqr_cost(sys, self, w, default_eval_horizon(T, T));
  const double from_maps = lqr_cost(out.maps, w) / dare_optimal_cost(sys, w);
  REQUIRE(from_sim == Catch::Approx(from_maps).margin(1e-8));
  REQUIRE(from_sim >= 1.0 - 1e-9);
}

TEST_CASE("normalized_lqr_cost rejects internally unstable implementations") {
  FirTransferMatrix r(1, 1, 1, 1);
  r.at(1)(0, 0) = 1.0;
  FirTransferMatrix m(1, 1, 1, 1);
  m.at(1)(0, 0) = -4.0;
  const LtiSystem sys(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const ImplementationMatrices impl(r, m);
  REQUIRE_THROWS_WITH(normalized_lqr_cost(sys, impl, LqrWeights::identity(1, 1), 8),
                      Catch::Matchers::ContainsSubstring("unstable"));
}

TEST_CASE("trajectories serialize as a csv table") {
  auto rng = test_rng(607);
  const LtiSystem sys = random_stable_system(rng, 2, 1);
  const ImplementationMatrices impl = random_stable_implementation(rng, sys, 2);
  const Trajectory traj = simulate_controller(sys, impl, impulse_disturbance(2, 3, 0), 3);

  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  std::string line;
  std::getline(ss, line);
  REQUIRE(line == "t,x1,x2,u1");
  std::getline(ss, line);
  REQUIRE(line == "0,0,0,0");
  int data_rows = 1;
  while (std::getline(ss, line))
    if (!line.empty()) ++data_rows;
  REQUIRE(data_rows == 4);
}
