#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sls/sls.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitExpectedInfeasible = 2;

struct CommonOpts {
  std::string config;
  std::string out;
  int n = 0;
  int T = 0;
  int T_c = 0;
  int locality = 0;
  int lambda_max_escalations = 0;
  double comm_speed = 0.0;
  double lambda = 0.0;
  double lambda_factor = 0.0;
  double l1_weight = 0.0;
  double penalty_weight = 0.0;
  bool mask = false;
  bool expect_infeasible = false;
  bool delay_penalty = false;
  bool locality_penalty = false;
};

void add_common_options(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config, "experiment config file (key = value lines)");
  sub->add_option("--out", o.out, "output directory for artifacts");
  sub->add_option("--n", o.n, "chain length");
  sub->add_option("--T", o.T, "closed-loop FIR horizon");
  sub->add_option("--Tc", o.T_c, "implementation FIR horizon");
  sub->add_option("--locality", o.locality, "locality radius for masks");
  sub->add_option("--comm-speed", o.comm_speed, "communication speed for delay masks");
  sub->add_option("--lambda", o.lambda, "starting regularization weight");
  sub->add_option("--lambda-factor", o.lambda_factor, "escalation factor of the lambda schedule");
  sub->add_option("--lambda-max-escalations", o.lambda_max_escalations,
                  "escalation cap of the lambda schedule");
  sub->add_option("--l1-weight", o.l1_weight, "entrywise l1 weight");
  sub->add_option("--penalty-weight", o.penalty_weight, "scale of the penalty tensors");
  sub->add_flag("--mask,!--no-mask", o.mask, "apply locality and delay masks");
  sub->add_flag("--expect-infeasible,!--no-expect-infeasible", o.expect_infeasible,
                "treat an infeasible outcome as the expected result");
  sub->add_flag("--delay-penalty", o.delay_penalty, "add delay penalty weights");
  sub->add_flag("--locality-penalty", o.locality_penalty, "add locality penalty weights");
}

sls::ExperimentConfig resolve_config(const CLI::App* sub, const CommonOpts& o) {
  sls::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = sls::load_config(o.config);
  if (sub->count("--n")) cfg.n = o.n;
  if (sub->count("--T")) cfg.T = o.T;
  if (sub->count("--Tc")) cfg.T_c = o.T_c;
  if (sub->count("--locality")) cfg.locality = o.locality;
  if (sub->count("--comm-speed")) cfg.comm_speed = o.comm_speed;
  if (sub->count("--lambda")) cfg.lambda = o.lambda;
  if (sub->count("--lambda-factor")) cfg.lambda_factor = o.lambda_factor;
  if (sub->count("--lambda-max-escalations")) cfg.lambda_max_escalations = o.lambda_max_escalations;
  if (sub->count("--l1-weight")) cfg.l1_weight = o.l1_weight;
  if (sub->count("--penalty-weight")) cfg.penalty_weight = o.penalty_weight;
  if (sub->count("--mask") || sub->count("--no-mask")) cfg.mask = o.mask;
  if (sub->count("--expect-infeasible") || sub->count("--no-expect-infeasible"))
    cfg.expect_infeasible = o.expect_infeasible;
  if (sub->count("--delay-penalty")) cfg.delay_penalty = o.delay_penalty;
  if (sub->count("--locality-penalty")) cfg.locality_penalty = o.locality_penalty;
  if (sub->count("--out")) cfg.out = o.out;
  if (cfg.out.empty()) cfg.out = ".";
  sls::validate_config(cfg);
  std::filesystem::create_directories(cfg.out);
  return cfg;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int run_synth_cl(const CLI::App* sub, const CommonOpts& o) {
  const sls::ExperimentConfig cfg = resolve_config(sub, o);
  const sls::LtiSystem sys = sls::system_from_config(cfg);
  const sls::LqrWeights w = sls::weights_from_config(cfg);
  sls::ClSynthesisOutcome outcome;
  if (cfg.mask) {
    const sls::Topology topo = sls::chain_topology(cfg.n, cfg.actuators);
    const sls::SparsityMask mask =
        sls::chain_constraint_mask(topo, cfg.locality, cfg.comm_speed, cfg.T);
    outcome = sls::synthesize_clmaps(sys, cfg.T, w, &mask);
  } else {
    outcome = sls::synthesize_clmaps(sys, cfg.T, w);
  }
  if (!outcome.feasible) {
    std::cout << "synth-cl: infeasible\n";
    if (cfg.expect_infeasible) return kExitExpectedInfeasible;
    std::cerr << "error: synthesis infeasible but not expected to be\n";
    return kExitError;
  }
  if (cfg.expect_infeasible) {
    std::cerr << "error: synthesis feasible but configured as expect_infeasible\n";
    return kExitError;
  }
  sls::write_fir_file(join(cfg.out, "phi_x.txt"), outcome.maps.phi_x);
  sls::write_fir_file(join(cfg.out, "phi_u.txt"), outcome.maps.phi_u);
  const double cost = sls::lqr_cost(outcome.maps, w) / sls::dare_optimal_cost(sys, w);
  std::cout << "synth-cl: feasible, normalized_cost " << cost << ", wrote " << cfg.out
            << "/phi_x.txt and phi_u.txt\n";
  return kExitOk;
}

int run_synth_impl(const CLI::App* sub, const CommonOpts& o) {
  const sls::ExperimentConfig cfg = resolve_config(sub, o);
  const sls::LtiSystem sys = sls::system_from_config(cfg);
  const sls::LqrWeights w = sls::weights_from_config(cfg);
  const sls::ClSynthesisOutcome step1 = sls::synthesize_clmaps(sys, cfg.T, w);
  if (!step1.feasible) {
    std::cerr << "error: unconstrained closed-loop synthesis infeasible\n";
    return kExitError;
  }
  const sls::Topology topo = sls::chain_topology(cfg.n, cfg.actuators);
  sls::ImplSynthesisOptions opts;
  opts.l1_weight = cfg.l1_weight;
  std::optional<sls::SparsityMask> mask;
  if (cfg.mask) {
    mask = sls::chain_constraint_mask(topo, cfg.locality, cfg.comm_speed, cfg.T_c);
    opts.mask = &*mask;
  }
  const std::optional<sls::PenaltyWeights> penalties = sls::build_penalties(cfg, topo, cfg.T_c);
  if (penalties) opts.penalties = &*penalties;
  const sls::LambdaScheduleResult sched =
      sls::lambda_schedule(sys, step1.maps, cfg.T_c, opts, cfg.lambda, cfg.lambda_factor,
                           sls::norm_power_checker(), cfg.lambda_max_escalations);
  const sls::ImplementationMatrices& impl = sched.synthesis.impl;
  sls::write_fir_file(join(cfg.out, "r_c.txt"), impl.r_c);
  sls::write_fir_file(join(cfg.out, "m_c.txt"), impl.m_c);
  {
    std::ofstream os(join(cfg.out, "diagnostics.txt"));
    if (!os) throw std::runtime_error("cannot open for writing: " + join(cfg.out, "diagnostics.txt"));
    os << std::setprecision(17);
    os << "certified = " << (sched.certified ? "true" : "false") << "\n";
    os << "lambda = " << sched.lambda_used << "\n";
    os << "escalations = " << sched.escalations << "\n";
    os << "objective = " << sched.synthesis.diagnostics.objective << "\n";
    os << "iterations = " << sched.synthesis.diagnostics.iterations << "\n";
    os << "hit_iteration_cap = "
       << (sched.synthesis.diagnostics.hit_iteration_cap ? "true" : "false") << "\n";
    os << "delta_norm_h2 = " << sched.synthesis.diagnostics.delta_norm_h2 << "\n";
    os << "constraint_residual = " << sls::constraint_residual(step1.maps, impl, sys) << "\n";
  }
  std::cout << "synth-impl: " << (sched.certified ? "certified" : "uncertified") << " at lambda "
            << sched.lambda_used << ", wrote " << cfg.out
            << "/r_c.txt, m_c.txt and diagnostics.txt\n";
  if (!sched.certified) {
    std::cerr << "error: lambda schedule exhausted without a certified implementation\n";
    return kExitError;
  }
  return kExitOk;
}

int run_check_stability(const CLI::App* sub, const CommonOpts& o, int processors) {
  const sls::ExperimentConfig cfg = resolve_config(sub, o);
  const sls::LtiSystem sys = sls::system_from_config(cfg);
  const sls::ImplementationMatrices impl(sls::read_fir_file(join(cfg.out, "r_c.txt")),
                                         sls::read_fir_file(join(cfg.out, "m_c.txt")));
  const sls::InternalDynamics dyn = sls::build_internal_dynamics(sys, impl);
  const sls::DistributedCheckResult result = sls::distributed_stability_check(dyn, processors);
  sls::write_trace_csv_file(join(cfg.out, "trace.csv"), result.trace);
  std::cout << "check-stability: " << sls::verdict_name(result.outcome.verdict) << " after "
            << result.outcome.iterations << " rounds, final norm " << result.outcome.final_norm
            << ", trace in " << cfg.out << "/trace.csv\n";
  return kExitOk;
}

int run_simulate(const CLI::App* sub, const CommonOpts& o, int horizon, int channel) {
  const sls::ExperimentConfig cfg = resolve_config(sub, o);
  const sls::LtiSystem sys = sls::system_from_config(cfg);
  const sls::ImplementationMatrices impl(sls::read_fir_file(join(cfg.out, "r_c.txt")),
                                         sls::read_fir_file(join(cfg.out, "m_c.txt")));
  if (horizon <= 0) horizon = sls::default_eval_horizon(cfg.T, impl.T_c());
  if (channel < 1 || channel > sys.n) {
    std::cerr << "error: impulse channel must lie in [1, n]\n";
    return kExitError;
  }
  std::vector<Eigen::VectorXd> w(static_cast<size_t>(horizon), Eigen::VectorXd::Zero(sys.n));
  w[0] = Eigen::VectorXd::Unit(sys.n, channel - 1);
  const sls::Trajectory traj = sls::simulate_controller(sys, impl, w, horizon);
  sls::write_trajectory_csv_file(join(cfg.out, "trajectory.csv"), traj);
  std::cout << "simulate: impulse on channel " << channel << " for " << horizon
            << " steps, trajectory in " << cfg.out << "/trajectory.csv\n";
  return kExitOk;
}

int run_bench_fig2(const CLI::App* sub, const CommonOpts& o) {
  const sls::ExperimentConfig cfg = resolve_config(sub, o);
  const sls::Fig2Result result = sls::run_fig2_sweep(cfg);
  sls::write_fig2_csv_file(join(cfg.out, "fig2.csv"), result);
  sls::write_fig2_svg_file(join(cfg.out, "fig2.svg"), result);
  sls::write_fig2_csv(std::cout, result);
  std::cout << "bench fig2: wrote " << cfg.out << "/fig2.csv and fig2.svg\n";
  return kExitOk;
}

int run_bench_table1(const CLI::App* sub, const CommonOpts& o) {
  const sls::ExperimentConfig cfg = resolve_config(sub, o);
  const sls::Table1Result result = sls::run_table1(cfg);
  sls::write_table1_csv_file(join(cfg.out, "table1.csv"), result);
  sls::write_table1_csv(std::cout, result);
  std::cout << "bench table1: wrote " << cfg.out << "/table1.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step synthesis of distributed state feedback controllers"};
  app.require_subcommand(1);

  CommonOpts o_cl, o_impl, o_check, o_sim, o_fig2, o_table1;
  int processors = 3;
  int sim_horizon = 0;
  int sim_channel = 1;

  CLI::App* synth_cl = app.add_subcommand("synth-cl", "synthesize closed-loop maps (step 1)");
  add_common_options(synth_cl, o_cl);

  CLI::App* synth_impl =
      app.add_subcommand("synth-impl", "synthesize an implementation of given order (step 2)");
  add_common_options(synth_impl, o_impl);

  CLI::App* check =
      app.add_subcommand("check-stability", "run the distributed stability check on saved matrices");
  add_common_options(check, o_check);
  check->add_option("--processors", processors, "simulated processor count");

  CLI::App* simulate = app.add_subcommand("simulate", "impulse-response simulation of saved matrices");
  add_common_options(simulate, o_sim);
  simulate->add_option("--horizon", sim_horizon, "simulation horizon");
  simulate->add_option("--channel", sim_channel, "disturbance channel (1-based)");

  CLI::App* bench = app.add_subcommand("bench", "benchmark experiments");
  bench->require_subcommand(1);
  CLI::App* fig2 = bench->add_subcommand("fig2", "controller-order sweep");
  add_common_options(fig2, o_fig2);
  CLI::App* table1 = bench->add_subcommand("table1", "LQR cost comparison");
  add_common_options(table1, o_table1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cl->parsed()) return run_synth_cl(synth_cl, o_cl);
    if (synth_impl->parsed()) return run_synth_impl(synth_impl, o_impl);
    if (check->parsed()) return run_check_stability(check, o_check, processors);
    if (simulate->parsed()) return run_simulate(simulate, o_sim, sim_horizon, sim_channel);
    if (bench->parsed()) {
      if (fig2->parsed()) return run_bench_fig2(fig2, o_fig2);
      if (table1->parsed()) return run_bench_table1(table1, o_table1);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
