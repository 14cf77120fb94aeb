#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sls/clsyn.hpp"
#include "sls/evalsim.hpp"
#include "sls/implsyn.hpp"
#include "sls/io.hpp"
#include "sls/lti_core.hpp"
#include "sls/sparsity.hpp"
#include "sls/stability.hpp"

namespace sls {

struct ExperimentConfig {
  int n = 10;
  std::vector<int> actuators{3, 6, 10};
  double diag_end = 0.6;
  double diag_mid = 0.2;
  double offdiag = 0.4;
  int T = 20;
  int T_c = 2;
  std::vector<int> T_c_list;  // empty means the default sweep 2..25
  bool mask = false;
  int locality = 1;
  double comm_speed = 1.0;
  double lambda = 0.01;
  double lambda_factor = 10.0;
  int lambda_max_escalations = 8;
  double l1_weight = 0.01;
  bool delay_penalty = false;
  bool locality_penalty = false;
  double penalty_weight = 0.01;
  double q_scale = 1.0;
  double r_scale = 1.0;
  bool expect_infeasible = false;
  std::string out;
};

inline void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& what) { throw std::runtime_error("config: " + what); };
  if (cfg.n < 2) fail("n must be at least 2");
  if (cfg.actuators.empty()) fail("actuators must be nonempty");
  for (int node : cfg.actuators)
    if (node < 1 || node > cfg.n) fail("actuator node out of range [1, n]");
  if (cfg.T < 1) fail("T must be positive");
  if (cfg.T_c < 1) fail("Tc must be positive");
  for (int tc : cfg.T_c_list)
    if (tc < 1) fail("Tc_list entries must be positive");
  if (cfg.locality < 0) fail("locality must be nonnegative");
  if (cfg.comm_speed <= 0.0) fail("comm_speed must be positive");
  if (cfg.lambda < 0.0) fail("lambda must be nonnegative");
  if (cfg.lambda_factor <= 1.0) fail("lambda_factor must exceed 1");
  if (cfg.lambda_max_escalations < 0) fail("lambda_max_escalations must be nonnegative");
  if (cfg.l1_weight < 0.0) fail("l1_weight must be nonnegative");
  if (cfg.penalty_weight < 0.0) fail("penalty_weight must be nonnegative");
  if (cfg.q_scale < 0.0) fail("q_scale must be nonnegative");
  if (cfg.r_scale <= 0.0) fail("r_scale must be positive");
}

inline ExperimentConfig parse_config(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "n") cfg.n = parse_int(value, key);
    else if (key == "actuators") cfg.actuators = parse_int_list(value, key);
    else if (key == "diag_end") cfg.diag_end = parse_double(value, key);
    else if (key == "diag_mid") cfg.diag_mid = parse_double(value, key);
    else if (key == "offdiag") cfg.offdiag = parse_double(value, key);
    else if (key == "T") cfg.T = parse_int(value, key);
    else if (key == "Tc") cfg.T_c = parse_int(value, key);
    else if (key == "Tc_list") cfg.T_c_list = parse_int_list(value, key);
    else if (key == "mask") cfg.mask = parse_bool(value, key);
    else if (key == "locality") cfg.locality = parse_int(value, key);
    else if (key == "comm_speed") cfg.comm_speed = parse_double(value, key);
    else if (key == "lambda") cfg.lambda = parse_double(value, key);
    else if (key == "lambda_factor") cfg.lambda_factor = parse_double(value, key);
    else if (key == "lambda_max_escalations") cfg.lambda_max_escalations = parse_int(value, key);
    else if (key == "l1_weight") cfg.l1_weight = parse_double(value, key);
    else if (key == "delay_penalty") cfg.delay_penalty = parse_bool(value, key);
    else if (key == "locality_penalty") cfg.locality_penalty = parse_bool(value, key);
    else if (key == "penalty_weight") cfg.penalty_weight = parse_double(value, key);
    else if (key == "q_scale") cfg.q_scale = parse_double(value, key);
    else if (key == "r_scale") cfg.r_scale = parse_double(value, key);
    else if (key == "expect_infeasible") cfg.expect_infeasible = parse_bool(value, key);
    else if (key == "out") cfg.out = value;
    else throw std::runtime_error("config key " + key + ": unknown key");
  }
  validate_config(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  return parse_config(parse_key_values_file(path));
}

// Tridiagonal chain plant: diag_end at both corner diagonal entries, diag_mid
// on the interior diagonal, offdiag on the sub- and super-diagonal; B selects
// the actuated nodes (1-based), one unit column per actuator.
inline LtiSystem build_chain_system(int n, const std::vector<int>& actuated_nodes,
                                    double diag_end = 0.6, double diag_mid = 0.2,
                                    double offdiag = 0.4) {
  if (n < 2) throw std::invalid_argument("build_chain_system: n must be at least 2");
  if (actuated_nodes.empty())
    throw std::invalid_argument("build_chain_system: at least one actuated node is required");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = (i == 0 || i == n - 1) ? diag_end : diag_mid;
    if (i + 1 < n) {
      A(i, i + 1) = offdiag;
      A(i + 1, i) = offdiag;
    }
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(actuated_nodes.size()));
  std::vector<bool> used(static_cast<size_t>(n), false);
  for (size_t j = 0; j < actuated_nodes.size(); ++j) {
    const int node = actuated_nodes[j];
    if (node < 1 || node > n)
      throw std::invalid_argument("build_chain_system: actuator node out of range");
    if (used[static_cast<size_t>(node - 1)])
      throw std::invalid_argument("build_chain_system: duplicate actuator node");
    used[static_cast<size_t>(node - 1)] = true;
    B(node - 1, static_cast<Eigen::Index>(j)) = 1.0;
  }
  return LtiSystem(A, B);
}

inline LtiSystem system_from_config(const ExperimentConfig& cfg) {
  return build_chain_system(cfg.n, cfg.actuators, cfg.diag_end, cfg.diag_mid, cfg.offdiag);
}

inline LqrWeights weights_from_config(const ExperimentConfig& cfg) {
  const int m = static_cast<int>(cfg.actuators.size());
  return LqrWeights(cfg.q_scale * Eigen::MatrixXd::Identity(cfg.n, cfg.n),
                    cfg.r_scale * Eigen::MatrixXd::Identity(m, m));
}

// Locality-and-delay constraint pattern used by the constrained experiments;
// validated (so an unrepresentable R_c(1) is rejected) before any solve runs.
inline SparsityMask chain_constraint_mask(const Topology& topo, int locality, double comm_speed,
                                          int horizon) {
  const SparsityMask merged =
      intersect(locality_mask(topo, locality, horizon), delay_mask(topo, comm_speed, horizon));
  merged.validate();
  return merged;
}

inline std::optional<PenaltyWeights> build_penalties(const ExperimentConfig& cfg,
                                                     const Topology& topo, int horizon) {
  if (!cfg.delay_penalty && !cfg.locality_penalty) return std::nullopt;
  PenaltyWeights out;
  out.horizon = horizon;
  out.weights_R.assign(static_cast<size_t>(horizon), Eigen::MatrixXd::Zero(topo.n, topo.n));
  out.weights_M.assign(static_cast<size_t>(horizon),
                       Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(topo.m()), topo.n));
  auto add = [&](const PenaltyWeights& p) {
    for (int k = 0; k < horizon; ++k) {
      out.weights_R[static_cast<size_t>(k)] += cfg.penalty_weight * p.weights_R[static_cast<size_t>(k)];
      out.weights_M[static_cast<size_t>(k)] += cfg.penalty_weight * p.weights_M[static_cast<size_t>(k)];
    }
  };
  if (cfg.delay_penalty) add(delay_penalty_weights(topo, horizon));
  if (cfg.locality_penalty) add(locality_penalty_weights(topo, horizon));
  return out;
}

inline double stacked_l1(const ImplementationMatrices& impl) {
  return norm_l1(fir_vstack(impl.r_c, impl.m_c));
}

struct Table1Row {
  std::string label;
  std::string status;
  double normalized_cost = std::numeric_limits<double>::quiet_NaN();
  double spectral_radius_az = std::numeric_limits<double>::quiet_NaN();
  double l1_norm = std::numeric_limits<double>::quiet_NaN();
};

struct Table1Result {
  std::vector<Table1Row> rows;
};

// LQR-cost comparison on the configured chain: the self-implemented
// unconstrained FIR controller, the (infeasible) constrained closed-loop
// synthesis, and the constrained two-step syntheses at T_c = T and the
// configured low order; the virtually-local baseline is an external method and
// only emitted as a placeholder row.
inline Table1Result run_table1(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const LtiSystem sys = system_from_config(cfg);
  const Topology topo = chain_topology(cfg.n, cfg.actuators);
  const LqrWeights w = weights_from_config(cfg);
  const SparsityMask mask_T = chain_constraint_mask(topo, cfg.locality, cfg.comm_speed, cfg.T);

  const ClSynthesisOutcome unconstrained = synthesize_clmaps(sys, cfg.T, w);
  if (!unconstrained.feasible)
    throw std::runtime_error("run_table1: unconstrained closed-loop synthesis is infeasible");

  Table1Result result;
  {
    const ImplementationMatrices self(unconstrained.maps.phi_x, unconstrained.maps.phi_u);
    Table1Row row;
    row.label = "fir_centralized";
    row.status = "ok";
    row.normalized_cost = normalized_lqr_cost(sys, self, w, default_eval_horizon(cfg.T, cfg.T));
    row.spectral_radius_az = spectral_radius(build_internal_dynamics(sys, self).A_z);
    row.l1_norm = stacked_l1(self);
    result.rows.push_back(row);
  }
  {
    const ClSynthesisOutcome constrained = synthesize_clmaps(sys, cfg.T, w, &mask_T);
    Table1Row row;
    row.label = "constrained_clmap";
    row.status = constrained.feasible ? "ok" : "infeasible";
    if (constrained.feasible) {
      const ImplementationMatrices self(constrained.maps.phi_x, constrained.maps.phi_u);
      row.normalized_cost = normalized_lqr_cost(sys, self, w, default_eval_horizon(cfg.T, cfg.T));
      row.spectral_radius_az = spectral_radius(build_internal_dynamics(sys, self).A_z);
      row.l1_norm = stacked_l1(self);
    }
    result.rows.push_back(row);
  }
  auto two_step_row = [&](int tc) {
    Table1Row row;
    row.label = "two_step_Tc_" + std::to_string(tc);
    const SparsityMask mask_tc = chain_constraint_mask(topo, cfg.locality, cfg.comm_speed, tc);
    const std::optional<PenaltyWeights> penalties = build_penalties(cfg, topo, tc);
    ImplSynthesisOptions opts;
    opts.l1_weight = cfg.l1_weight;
    opts.mask = &mask_tc;
    if (penalties) opts.penalties = &*penalties;
    const LambdaScheduleResult sched =
        lambda_schedule(sys, unconstrained.maps, tc, opts, cfg.lambda, cfg.lambda_factor,
                        norm_power_checker(), cfg.lambda_max_escalations);
    row.status = sched.certified ? "ok" : "uncertified";
    const ImplementationMatrices& impl = sched.synthesis.impl;
    row.spectral_radius_az = spectral_radius(build_internal_dynamics(sys, impl).A_z);
    row.l1_norm = stacked_l1(impl);
    if (sched.certified)
      row.normalized_cost = normalized_lqr_cost(sys, impl, w, default_eval_horizon(cfg.T, tc));
    return row;
  };
  result.rows.push_back(two_step_row(cfg.T));
  result.rows.push_back(two_step_row(cfg.T_c));
  {
    Table1Row row;
    row.label = "virtually_local";
    row.status = "not computed (external baseline)";
    result.rows.push_back(row);
  }
  return result;
}

namespace detail {

inline void write_csv_number(std::ostream& os, double v) {
  if (!std::isnan(v)) os << v;
}

}  // namespace detail

inline void write_table1_csv(std::ostream& os, const Table1Result& result) {
  os << "label,status,normalized_cost,spectral_radius_az,l1_norm\n" << std::setprecision(12);
  for (const auto& row : result.rows) {
    os << row.label << "," << row.status << ",";
    detail::write_csv_number(os, row.normalized_cost);
    os << ",";
    detail::write_csv_number(os, row.spectral_radius_az);
    os << ",";
    detail::write_csv_number(os, row.l1_norm);
    os << "\n";
  }
}

struct Fig2Row {
  std::string label;
  int T_c = 0;
  std::string status;
  double dx_h2 = std::numeric_limits<double>::quiet_NaN();
  double du_h2 = std::numeric_limits<double>::quiet_NaN();
  double spectral_radius_az = std::numeric_limits<double>::quiet_NaN();
  double l1_norm = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

struct Fig2Result {
  std::vector<Fig2Row> rows;
};

// Unconstrained two-step sweep over controller orders: for each T_c the
// implementation is synthesized with l1 regularization and the escalating
// lambda schedule, then compared against the step-1 maps (normalized H2
// differences), certified, and measured (spectral radius, stacked induced
// l-infinity norm). The self-implementation of the step-1 maps is the
// baseline row.
inline Fig2Result run_fig2_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const LtiSystem sys = system_from_config(cfg);
  const LqrWeights w = weights_from_config(cfg);

  const ClSynthesisOutcome unconstrained = synthesize_clmaps(sys, cfg.T, w);
  if (!unconstrained.feasible)
    throw std::runtime_error("run_fig2_sweep: unconstrained closed-loop synthesis is infeasible");
  const ClosedLoopMaps& cl = unconstrained.maps;

  std::vector<int> orders = cfg.T_c_list;
  if (orders.empty()) {
    orders.resize(24);
    std::iota(orders.begin(), orders.end(), 2);
  }

  Fig2Result result;
  {
    const ImplementationMatrices self(cl.phi_x, cl.phi_u);
    Fig2Row row;
    row.label = "self_implementation";
    row.T_c = cfg.T;
    row.status = "ok";
    const ClosedLoopDifference d =
        closed_loop_difference(cl, self, sys, default_eval_horizon(cfg.T, cfg.T));
    row.dx_h2 = d.dx;
    row.du_h2 = d.du;
    row.spectral_radius_az = spectral_radius(build_internal_dynamics(sys, self).A_z);
    row.l1_norm = stacked_l1(self);
    row.lambda = 0.0;
    result.rows.push_back(row);
  }
  for (int tc : orders) {
    ImplSynthesisOptions opts;
    opts.l1_weight = cfg.l1_weight;
    const LambdaScheduleResult sched =
        lambda_schedule(sys, cl, tc, opts, cfg.lambda, cfg.lambda_factor, norm_power_checker(),
                        cfg.lambda_max_escalations);
    Fig2Row row;
    row.label = "two_step";
    row.T_c = tc;
    row.status = sched.certified ? "ok" : "uncertified";
    const ImplementationMatrices& impl = sched.synthesis.impl;
    if (sched.certified) {
      const ClosedLoopDifference d =
          closed_loop_difference(cl, impl, sys, default_eval_horizon(cfg.T, tc));
      row.dx_h2 = d.dx;
      row.du_h2 = d.du;
    }
    row.spectral_radius_az = spectral_radius(build_internal_dynamics(sys, impl).A_z);
    row.l1_norm = stacked_l1(impl);
    row.lambda = sched.lambda_used;
    result.rows.push_back(row);
  }
  return result;
}

inline void write_fig2_csv(std::ostream& os, const Fig2Result& result) {
  os << "label,T_c,status,dx_h2,du_h2,spectral_radius_az,l1_norm,lambda\n"
     << std::setprecision(12);
  for (const auto& row : result.rows) {
    os << row.label << "," << row.T_c << "," << row.status << ",";
    detail::write_csv_number(os, row.dx_h2);
    os << ",";
    detail::write_csv_number(os, row.du_h2);
    os << ",";
    detail::write_csv_number(os, row.spectral_radius_az);
    os << ",";
    detail::write_csv_number(os, row.l1_norm);
    os << ",";
    detail::write_csv_number(os, row.lambda);
    os << "\n";
  }
}

// Static line plot of the sweep's normalized closed-loop differences vs. T_c.
inline void write_fig2_svg(std::ostream& os, const Fig2Result& result) {
  std::vector<std::pair<int, double>> dx, du;
  for (const auto& row : result.rows)
    if (row.label == "two_step" && row.status == "ok") {
      dx.emplace_back(row.T_c, row.dx_h2);
      du.emplace_back(row.T_c, row.du_h2);
    }
  const int width = 640, height = 420, ml = 70, mr = 30, mt = 30, mb = 55;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  if (dx.empty()) {
    os << "<text x=\"" << width / 2 << "\" y=\"" << height / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\">no certified rows</text>\n</svg>\n";
    return;
  }
  int tc_min = dx.front().first, tc_max = dx.front().first;
  double y_max = 0.0;
  for (const auto& [tc, v] : dx) {
    tc_min = std::min(tc_min, tc);
    tc_max = std::max(tc_max, tc);
    y_max = std::max(y_max, v);
  }
  for (const auto& [tc, v] : du) y_max = std::max(y_max, v);
  if (tc_max == tc_min) tc_max = tc_min + 1;
  y_max *= 1.15;
  if (y_max <= 0.0) y_max = 1.0;
  auto px = [&](double tc) {
    return ml + (tc - tc_min) / static_cast<double>(tc_max - tc_min) * (width - ml - mr);
  };
  auto py = [&](double v) { return height - mb - v / y_max * (height - mt - mb); };
  auto polyline = [&](const std::vector<std::pair<int, double>>& pts, const char* color) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [tc, v] : pts) os << px(tc) << "," << py(v) << " ";
    os << "\"/>\n";
    for (const auto& [tc, v] : pts)
      os << "<circle cx=\"" << px(tc) << "\" cy=\"" << py(v) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
  };
  os << std::setprecision(6);
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  for (int tc = tc_min; tc <= tc_max; tc += std::max(1, (tc_max - tc_min) / 8)) {
    os << "<line x1=\"" << px(tc) << "\" y1=\"" << height - mb << "\" x2=\"" << px(tc) << "\" y2=\""
       << height - mb + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(tc) << "\" y=\"" << height - mb + 20
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << tc
       << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = y_max * i / 4.0;
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\"" << py(v)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
       << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">" << std::setprecision(3)
       << v << "</text>\n";
  }
  os << std::setprecision(6);
  polyline(dx, "#1f6fb5");
  polyline(du, "#c23b22");
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">controller order "
        "T_c</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 "
        "18 "
     << (mt + height - mb) / 2 << ")\">normalized H2 difference</text>\n";
  os << "<rect x=\"" << width - mr - 130 << "\" y=\"" << mt + 6 << "\" width=\"14\" height=\"3\" "
     << "fill=\"#1f6fb5\"/>\n";
  os << "<text x=\"" << width - mr - 110 << "\" y=\"" << mt + 12
     << "\" font-size=\"12\" font-family=\"sans-serif\">state map (dx)</text>\n";
  os << "<rect x=\"" << width - mr - 130 << "\" y=\"" << mt + 24 << "\" width=\"14\" height=\"3\" "
     << "fill=\"#c23b22\"/>\n";
  os << "<text x=\"" << width - mr - 110 << "\" y=\"" << mt + 30
     << "\" font-size=\"12\" font-family=\"sans-serif\">input map (du)</text>\n";
  os << "</svg>\n";
}

inline void write_table1_csv_file(const std::string& path, const Table1Result& result) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_table1_csv(os, result);
}

inline void write_fig2_csv_file(const std::string& path, const Fig2Result& result) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_fig2_csv(os, result);
}

inline void write_fig2_svg_file(const std::string& path, const Fig2Result& result) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_fig2_svg(os, result);
}

}  // namespace sls
