#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <barrier>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sls/implsyn.hpp"
#include "sls/lti_core.hpp"

namespace sls {

// Block-companion dynamics of the internal signal: identity blocks on the
// super-diagonal, bottom block-row [-Delta_c(T_c), ..., -Delta_c(1)].
struct InternalDynamics {
  Eigen::MatrixXd A_z;
  int n = 0;
  int T_c = 0;
};

inline InternalDynamics build_internal_dynamics(const LtiSystem& sys,
                                                const ImplementationMatrices& impl) {
  if (impl.n() != sys.n || impl.m() != sys.m)
    throw std::invalid_argument("build_internal_dynamics: dimension mismatch");
  const DeltaC dc = compute_delta_c(sys, impl);
  const int n = sys.n, T_c = impl.T_c();
  InternalDynamics dyn;
  dyn.n = n;
  dyn.T_c = T_c;
  dyn.A_z = Eigen::MatrixXd::Zero(n * T_c, n * T_c);
  for (int b = 1; b < T_c; ++b)
    dyn.A_z.block((b - 1) * n, b * n, n, n) = Eigen::MatrixXd::Identity(n, n);
  for (int j = 1; j <= T_c; ++j)
    dyn.A_z.block((T_c - 1) * n, (T_c - j) * n, n, n) = -dc.delta_c.at(j);
  return dyn;
}

// Sufficient internal-stability condition: the induced l-infinity norm of the
// strictly proper deviation Delta stays below one.
inline bool small_gain_check(const FirTransferMatrix& delta) {
  delta.validate();
  if (delta.start < 1)
    throw std::invalid_argument("small_gain_check: delta must be strictly proper");
  return norm_l1(delta) < 1.0;
}

enum class Verdict { Running, Certified, LargeTransient, MaxIterations };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Running: return "running";
    case Verdict::Certified: return "certified";
    case Verdict::LargeTransient: return "large_transient";
    case Verdict::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

struct CheckOutcome {
  Verdict verdict = Verdict::Running;
  int iterations = 0;
  double final_norm = 0.0;
};

namespace detail {

// Column kernels shared by the serial and the distributed check; both must go
// through these so the verdicts agree bitwise for every processor count.
inline void power_step_columns(const Eigen::MatrixXd& A, const Eigen::MatrixXd& cur,
                               int col_begin, int col_count, Eigen::MatrixXd& next) {
  for (int c = col_begin; c < col_begin + col_count; ++c) next.col(c) = A * cur.col(c);
}

inline double max_column_abs_sum(const Eigen::MatrixXd& mat, int col_begin, int col_count) {
  double best = 0.0;
  for (int c = col_begin; c < col_begin + col_count; ++c)
    best = std::max(best, mat.col(c).cwiseAbs().sum());
  return best;
}

inline Verdict round_verdict(double norm, double M, int k, int k_max) {
  if (norm < 1.0) return Verdict::Certified;
  if (norm > M) return Verdict::LargeTransient;
  if (k == k_max) return Verdict::MaxIterations;
  return Verdict::Running;
}

}  // namespace detail

// Power-iteration certification: forms A^k for k = 1..k_max and stops when the
// 1-to-1 norm (max column abs-sum) drops below one (Certified), exceeds the
// transient bound M (LargeTransient), or the iteration cap is hit.
inline CheckOutcome norm_power_certify(const Eigen::MatrixXd& A, double M = 1e4,
                                       int k_max = 200) {
  if (A.rows() != A.cols()) throw std::invalid_argument("norm_power_certify: matrix must be square");
  if (M <= 0.0 || k_max < 1)
    throw std::invalid_argument("norm_power_certify: M and k_max must be positive");
  const int N = static_cast<int>(A.rows());
  Eigen::MatrixXd cur = Eigen::MatrixXd::Identity(N, N);
  Eigen::MatrixXd next(N, N);
  CheckOutcome out;
  for (int k = 1; k <= k_max; ++k) {
    detail::power_step_columns(A, cur, 0, N, next);
    std::swap(cur, next);
    out.iterations = k;
    out.final_norm = detail::max_column_abs_sum(cur, 0, N);
    out.verdict = detail::round_verdict(out.final_norm, M, k, k_max);
    if (out.verdict != Verdict::Running) break;
  }
  return out;
}

struct TraceRow {
  int k = 0;
  double global_norm = 0.0;
  Verdict verdict_so_far = Verdict::Running;
};

struct DistributedCheckResult {
  CheckOutcome outcome;
  std::vector<TraceRow> trace;
  std::vector<long long> ops_per_processor_per_round;
  int rounds = 0;
};

// In-process simulation of the distributed protocol: the columns of A^k are
// partitioned contiguously across processors, each round every processor
// multiplies its own columns by A and reports its local max column abs-sum,
// and a consensus max-reduce decides the round verdict. The reduce is a pure
// max, so the result is bitwise identical to norm_power_certify for any
// processor count.
inline DistributedCheckResult distributed_stability_check(const Eigen::MatrixXd& A, int processors,
                                                          double M = 1e4, int k_max = 200) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("distributed_stability_check: matrix must be square");
  const int N = static_cast<int>(A.rows());
  if (processors < 1 || processors > N)
    throw std::invalid_argument(
        "distributed_stability_check: processors must lie in [1, matrix dimension]");
  if (M <= 0.0 || k_max < 1)
    throw std::invalid_argument("distributed_stability_check: M and k_max must be positive");

  const int base = N / processors;
  std::vector<int> begins(static_cast<size_t>(processors));
  std::vector<int> counts(static_cast<size_t>(processors));
  for (int i = 0; i < processors; ++i) {
    begins[static_cast<size_t>(i)] = i * base;
    counts[static_cast<size_t>(i)] = (i == processors - 1) ? N - i * base : base;
  }

  DistributedCheckResult result;
  for (int i = 0; i < processors; ++i)
    result.ops_per_processor_per_round.push_back(static_cast<long long>(counts[static_cast<size_t>(i)]) *
                                                 N * N);

  std::vector<Eigen::MatrixXd> buf{Eigen::MatrixXd::Identity(N, N), Eigen::MatrixXd::Zero(N, N)};
  std::vector<double> local_norms(static_cast<size_t>(processors), 0.0);
  int round = 0;
  bool done = false;

  auto consensus = [&]() noexcept {
    ++round;
    double global = 0.0;
    for (double v : local_norms) global = std::max(global, v);
    const Verdict verdict = detail::round_verdict(global, M, round, k_max);
    result.trace.push_back({round, global, verdict});
    result.outcome = {verdict, round, global};
    done = verdict != Verdict::Running;
  };
  std::barrier multiply_done(processors);
  std::barrier norm_done(processors, consensus);

  auto worker = [&](int i) {
    const int begin = begins[static_cast<size_t>(i)];
    const int count = counts[static_cast<size_t>(i)];
    for (int k = 1;; ++k) {
      const Eigen::MatrixXd& cur = buf[static_cast<size_t>((k - 1) % 2)];
      Eigen::MatrixXd& next = buf[static_cast<size_t>(k % 2)];
      detail::power_step_columns(A, cur, begin, count, next);
      multiply_done.arrive_and_wait();
      local_norms[static_cast<size_t>(i)] = detail::max_column_abs_sum(next, begin, count);
      norm_done.arrive_and_wait();
      if (done) break;
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(processors));
  for (int i = 0; i < processors; ++i) threads.emplace_back(worker, i);
  for (auto& t : threads) t.join();

  result.rounds = round;
  return result;
}

inline DistributedCheckResult distributed_stability_check(const InternalDynamics& dyn,
                                                          int processors, double M = 1e4,
                                                          int k_max = 200) {
  return distributed_stability_check(dyn.A_z, processors, M, k_max);
}

// Stability checker backed by norm_power_certify, for use with lambda_schedule.
inline StabilityChecker norm_power_checker(double M = 1e4, int k_max = 200) {
  return [M, k_max](const LtiSystem& sys, const ImplementationMatrices& impl) {
    const InternalDynamics dyn = build_internal_dynamics(sys, impl);
    return norm_power_certify(dyn.A_z, M, k_max).verdict == Verdict::Certified;
  };
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "k,global_norm,verdict_so_far\n";
  os << std::setprecision(17);
  for (const auto& row : trace)
    os << row.k << "," << row.global_norm << "," << verdict_name(row.verdict_so_far) << "\n";
}

inline void write_trace_csv_file(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_trace_csv(os, trace);
}

}  // namespace sls
