// Order/performance tradeoff on the 10-node chain: synthesizes the step-1
// closed-loop maps, then implementations of shrinking order, and prints how
// far each implemented closed loop lands from the designed one.
#include <cstdio>

#include "sls/sls.hpp"

int main() {
  sls::ExperimentConfig cfg;
  const sls::LtiSystem sys = sls::system_from_config(cfg);
  const sls::LqrWeights w = sls::weights_from_config(cfg);

  const sls::ClSynthesisOutcome step1 = sls::synthesize_clmaps(sys, cfg.T, w);
  if (!step1.feasible) {
    std::puts("step 1 infeasible (unexpected on the chain)");
    return 1;
  }
  const double dare = sls::dare_optimal_cost(sys, w);
  std::printf("chain: n=%d, T=%d, optimal infinite-horizon cost %.4f\n", cfg.n, cfg.T, dare);
  std::printf("step-1 maps: normalized cost %.4f, stacked l1 norm %.3f\n",
              sls::lqr_cost(step1.maps, w) / dare,
              sls::norm_l1(sls::fir_vstack(step1.maps.phi_x, step1.maps.phi_u)));

  std::printf("%6s %10s %10s %10s %10s %10s\n", "T_c", "dx", "du", "rho(A_z)", "l1", "lambda");
  for (int tc : {20, 10, 5, 3, 2}) {
    sls::ImplSynthesisOptions opts;
    opts.l1_weight = cfg.l1_weight;
    const sls::LambdaScheduleResult sched =
        sls::lambda_schedule(sys, step1.maps, tc, opts, cfg.lambda, cfg.lambda_factor,
                             sls::norm_power_checker(), cfg.lambda_max_escalations);
    if (!sched.certified) {
      std::printf("%6d: not certified within the lambda schedule\n", tc);
      continue;
    }
    const sls::ImplementationMatrices& impl = sched.synthesis.impl;
    const sls::ClosedLoopDifference d = sls::closed_loop_difference(
        step1.maps, impl, sys, sls::default_eval_horizon(cfg.T, tc));
    const double rho = sls::spectral_radius(sls::build_internal_dynamics(sys, impl).A_z);
    std::printf("%6d %10.4f %10.4f %10.4f %10.3f %10.2g\n", tc, d.dx, d.du, rho,
                sls::stacked_l1(impl), sched.lambda_used);
  }
  return 0;
}
