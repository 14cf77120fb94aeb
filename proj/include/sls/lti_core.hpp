#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sls {

// Discrete-time LTI plant x_{t+1} = A x_t + B u_t + w_t.
struct LtiSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  int n = 0;
  int m = 0;

  LtiSystem() = default;
  LtiSystem(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in)
      : A(std::move(A_in)),
        B(std::move(B_in)),
        n(static_cast<int>(A.rows())),
        m(static_cast<int>(B.cols())) {
    if (n < 1 || A.cols() != n)
      throw std::invalid_argument("LtiSystem: A must be square and nonempty");
    if (m < 1 || B.rows() != n)
      throw std::invalid_argument("LtiSystem: B must have n rows and at least one column");
  }
};

// Finite-impulse-response transfer matrix
//   X(z) = sum_{k=start}^{horizon} X(k) z^{-k},
// stored as the ordered list of spectral coefficients X(start..horizon).
struct FirTransferMatrix {
  int rows = 0;
  int cols = 0;
  int start = 0;
  int horizon = -1;
  std::vector<Eigen::MatrixXd> coeffs;

  FirTransferMatrix() = default;

  FirTransferMatrix(int rows_in, int cols_in, int start_in, int horizon_in)
      : rows(rows_in), cols(cols_in), start(start_in), horizon(horizon_in) {
    if (rows < 1 || cols < 1)
      throw std::invalid_argument("FirTransferMatrix: rows and cols must be positive");
    if (horizon < start)
      throw std::invalid_argument("FirTransferMatrix: horizon must be >= start");
    coeffs.assign(static_cast<size_t>(n_terms()), Eigen::MatrixXd::Zero(rows, cols));
  }

  int n_terms() const { return horizon - start + 1; }

  bool has(int k) const { return k >= start && k <= horizon; }

  Eigen::MatrixXd& at(int k) {
    if (!has(k)) throw std::out_of_range("FirTransferMatrix: spectral index out of range");
    return coeffs[static_cast<size_t>(k - start)];
  }

  const Eigen::MatrixXd& at(int k) const {
    if (!has(k)) throw std::out_of_range("FirTransferMatrix: spectral index out of range");
    return coeffs[static_cast<size_t>(k - start)];
  }

  Eigen::MatrixXd coeff_or_zero(int k) const {
    if (has(k)) return coeffs[static_cast<size_t>(k - start)];
    return Eigen::MatrixXd::Zero(rows, cols);
  }

  void validate() const {
    if (rows < 1 || cols < 1)
      throw std::invalid_argument("FirTransferMatrix: rows and cols must be positive");
    if (horizon < start)
      throw std::invalid_argument("FirTransferMatrix: horizon must be >= start");
    if (coeffs.size() != static_cast<size_t>(n_terms()))
      throw std::invalid_argument("FirTransferMatrix: coefficient count does not match range");
    for (const auto& c : coeffs)
      if (c.rows() != rows || c.cols() != cols)
        throw std::invalid_argument("FirTransferMatrix: coefficient shape mismatch");
  }
};

inline FirTransferMatrix fir_zero(int rows, int cols, int start, int horizon) {
  return FirTransferMatrix(rows, cols, start, horizon);
}

// Identity map at z^0.
inline FirTransferMatrix fir_identity(int n) {
  FirTransferMatrix out(n, n, 0, 0);
  out.at(0) = Eigen::MatrixXd::Identity(n, n);
  return out;
}

inline FirTransferMatrix fir_add(const FirTransferMatrix& x, const FirTransferMatrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw std::invalid_argument("fir_add: dimension mismatch");
  FirTransferMatrix out(x.rows, x.cols, std::min(x.start, y.start), std::max(x.horizon, y.horizon));
  for (int k = out.start; k <= out.horizon; ++k) {
    if (x.has(k)) out.at(k) += x.at(k);
    if (y.has(k)) out.at(k) += y.at(k);
  }
  return out;
}

inline FirTransferMatrix fir_scale(const FirTransferMatrix& x, double s) {
  FirTransferMatrix out = x;
  for (auto& c : out.coeffs) c *= s;
  return out;
}

inline FirTransferMatrix fir_subtract(const FirTransferMatrix& x, const FirTransferMatrix& y) {
  return fir_add(x, fir_scale(y, -1.0));
}

// Spectral convolution Z(k) = sum_j X(j) Y(k-j).
inline FirTransferMatrix fir_multiply(const FirTransferMatrix& x, const FirTransferMatrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("fir_multiply: dimension mismatch");
  FirTransferMatrix out(x.rows, y.cols, x.start + y.start, x.horizon + y.horizon);
  for (int k = out.start; k <= out.horizon; ++k) {
    const int j_lo = std::max(x.start, k - y.horizon);
    const int j_hi = std::min(x.horizon, k - y.start);
    for (int j = j_lo; j <= j_hi; ++j) out.at(k).noalias() += x.at(j) * y.at(k - j);
  }
  return out;
}

// Static left multiplication M * X(z).
inline FirTransferMatrix fir_multiply(const Eigen::MatrixXd& m, const FirTransferMatrix& x) {
  if (m.cols() != x.rows) throw std::invalid_argument("fir_multiply: dimension mismatch");
  FirTransferMatrix out(static_cast<int>(m.rows()), x.cols, x.start, x.horizon);
  for (int k = x.start; k <= x.horizon; ++k) out.at(k).noalias() = m * x.at(k);
  return out;
}

// Multiplies by z^{-shift}: each coefficient keeps its value, indices move by shift.
inline FirTransferMatrix fir_shifted(const FirTransferMatrix& x, int shift) {
  FirTransferMatrix out = x;
  out.start += shift;
  out.horizon += shift;
  return out;
}

inline FirTransferMatrix fir_truncated(const FirTransferMatrix& x, int new_horizon) {
  if (new_horizon < x.start)
    throw std::invalid_argument("fir_truncated: horizon must be >= start");
  FirTransferMatrix out(x.rows, x.cols, x.start, std::min(x.horizon, new_horizon));
  for (int k = out.start; k <= out.horizon; ++k) out.at(k) = x.at(k);
  return out;
}

// Stacks [X; Y] over the aligned spectral range.
inline FirTransferMatrix fir_vstack(const FirTransferMatrix& x, const FirTransferMatrix& y) {
  if (x.cols != y.cols) throw std::invalid_argument("fir_vstack: column mismatch");
  FirTransferMatrix out(x.rows + y.rows, x.cols, std::min(x.start, y.start),
                        std::max(x.horizon, y.horizon));
  for (int k = out.start; k <= out.horizon; ++k) {
    out.at(k).topRows(x.rows) = x.coeff_or_zero(k);
    out.at(k).bottomRows(y.rows) = y.coeff_or_zero(k);
  }
  return out;
}

// Truncated inverse of X(z) with X(0) invertible:
//   Y(0) = X(0)^{-1},  Y(k) = -X(0)^{-1} sum_{j=1..k} X(j) Y(k-j).
inline FirTransferMatrix fir_inverse_truncated(const FirTransferMatrix& x, int out_horizon) {
  if (x.rows != x.cols) throw std::invalid_argument("fir_inverse_truncated: matrix must be square");
  if (x.start != 0) throw std::invalid_argument("fir_inverse_truncated: start must be 0");
  if (out_horizon < 0) throw std::invalid_argument("fir_inverse_truncated: horizon must be >= 0");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(x.at(0));
  if (!lu.isInvertible())
    throw std::invalid_argument("fir_inverse_truncated: leading coefficient is singular");
  const Eigen::MatrixXd x0_inv = lu.inverse();
  FirTransferMatrix out(x.rows, x.cols, 0, out_horizon);
  out.at(0) = x0_inv;
  for (int k = 1; k <= out_horizon; ++k) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.rows, x.cols);
    const int j_hi = std::min(k, x.horizon);
    for (int j = 1; j <= j_hi; ++j) acc.noalias() += x.at(j) * out.at(k - j);
    out.at(k).noalias() = -x0_inv * acc;
  }
  return out;
}

// Pointwise evaluation X(z) at a complex point (test oracle and diagnostics).
inline Eigen::MatrixXcd fir_evaluate(const FirTransferMatrix& x, std::complex<double> z) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(x.rows, x.cols);
  for (int k = x.start; k <= x.horizon; ++k)
    acc += x.at(k).cast<std::complex<double>>() * std::pow(z, -k);
  return acc;
}

// sqrt of the sum of squared Frobenius norms of all spectral coefficients.
inline double norm_h2(const FirTransferMatrix& x) {
  double acc = 0.0;
  for (const auto& c : x.coeffs) acc += c.squaredNorm();
  return std::sqrt(acc);
}

// Induced l_inf -> l_inf norm of the FIR impulse response:
// max over rows of the absolute row sum accumulated across all coefficients.
inline double norm_l1(const FirTransferMatrix& x) {
  if (x.coeffs.empty()) return 0.0;
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(x.rows);
  for (const auto& c : x.coeffs) row_sums += c.cwiseAbs().rowwise().sum();
  return row_sums.maxCoeff();
}

// Induced 1-to-1 norm: maximum absolute column sum.
inline double norm_one_to_one(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

inline double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_radius: eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sls
