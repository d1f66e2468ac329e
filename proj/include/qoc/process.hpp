// Quantum-process representations and fidelity metrics.
//
// Processes are stored either as Kraus sets {A_i} or as the canonical-basis
// super-operator (Choi matrix) beta = sum_uv B_uv (x) eps(B_uv), with
// B_uv = |u><v| and the first tensor factor indexing the input. The Choi
// matrix is d^2 x d^2 over the computational subspace; leaky channels are
// simply non-trace-preserving there.
#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qoc/rng.hpp"
#include "qoc/types.hpp"

namespace qoc {

using DensityMatrix = Matrix;

struct KrausProcess {
  std::vector<Matrix> ops;

  int dim() const { return ops.empty() ? 0 : static_cast<int>(ops.front().rows()); }

  void validate(double tol = 1e-10) const {
    if (ops.empty()) throw std::invalid_argument("KrausProcess: no operators");
    const int n = dim();
    Matrix sum = Matrix::Zero(n, n);
    for (const auto& a : ops) {
      if (a.rows() != n || a.cols() != n)
        throw std::invalid_argument("KrausProcess: operators must be square, equal dim");
      sum += a.adjoint() * a;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(sum));
    if (es.eigenvalues().maxCoeff() > 1.0 + tol)
      throw std::invalid_argument("KrausProcess: sum A^dag A exceeds identity");
  }

  DensityMatrix apply(const DensityMatrix& rho) const {
    if (rho.rows() != dim() || rho.cols() != dim())
      throw std::invalid_argument("KrausProcess: dimension mismatch");
    Matrix out = Matrix::Zero(dim(), dim());
    for (const auto& a : ops) out += a * rho * a.adjoint();
    return out;
  }
};

struct ProcessMatrix {
  int d = 0;
  Matrix beta;  // d^2 x d^2, block (u, v) = eps(B_uv)

  Eigen::Block<Matrix> block(int u, int v) { return beta.block(u * d, v * d, d, d); }
  Eigen::Block<const Matrix> block(int u, int v) const {
    return beta.block(u * d, v * d, d, d);
  }

  DensityMatrix apply(const DensityMatrix& rho) const {
    if (rho.rows() != d || rho.cols() != d)
      throw std::invalid_argument("ProcessMatrix: dimension mismatch");
    Matrix out = Matrix::Zero(d, d);
    for (int u = 0; u < d; ++u)
      for (int v = 0; v < d; ++v) out += rho(u, v) * block(u, v);
    return out;
  }

  // Hermitian as a Choi matrix; PSD up to the eigenvalue floor for CP maps.
  void validate(double herm_tol = 1e-10, double psd_floor = -1e-8) const {
    if (beta.rows() != d * d || beta.cols() != d * d)
      throw std::invalid_argument("ProcessMatrix: beta must be d^2 x d^2");
    if (!is_hermitian(beta, herm_tol))
      throw std::invalid_argument("ProcessMatrix: Choi matrix must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(beta));
    if (es.eigenvalues().minCoeff() < psd_floor)
      throw std::invalid_argument("ProcessMatrix: Choi matrix must be positive semidefinite");
  }
};

// Eigenvalue floor at zero for matrices that are PSD up to estimation noise.
inline Matrix psd_projected(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  const RealVector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

// Choi assembly from Kraus operators: eps(B_uv) = sum_i (A_i e_u)(A_i e_v)^dag.
inline ProcessMatrix kraus_to_choi(const KrausProcess& p) {
  const int n = p.dim();
  ProcessMatrix out;
  out.d = n;
  out.beta = Matrix::Zero(n * n, n * n);
  for (const auto& a : p.ops)
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        out.block(u, v) += a.col(u) * a.col(v).adjoint();
  return out;
}

inline ProcessMatrix choi_of_unitary(const Matrix& u) {
  if (u.rows() != u.cols()) throw std::invalid_argument("choi_of_unitary: U must be square");
  return kraus_to_choi(KrausProcess{{u}});
}

// Choi matrix of a channel acting on a subspace of a larger space, with both
// input and output restricted to the subspace rows/columns.
inline ProcessMatrix subspace_choi(const KrausProcess& p, const std::vector<int>& positions) {
  const int n = p.dim();
  const int d = static_cast<int>(positions.size());
  for (int pos : positions)
    if (pos < 0 || pos >= n) throw std::out_of_range("subspace_choi: position outside basis");
  ProcessMatrix out;
  out.d = d;
  out.beta = Matrix::Zero(d * d, d * d);
  for (const auto& a : p.ops)
    for (int u = 0; u < d; ++u)
      for (int v = 0; v < d; ++v) {
        Vector cu(d), cv(d);
        for (int r = 0; r < d; ++r) {
          cu(r) = a(positions[r], positions[u]);
          cv(r) = a(positions[r], positions[v]);
        }
        out.block(u, v) += cu * cv.adjoint();
      }
  return out;
}

// F_p = Re tr(beta_a beta_b^dag) / d^2. The loss-aware normalization
// sqrt(tr(beta_a beta_a^dag) tr(beta_b beta_b^dag)) is available behind a
// flag but the default follows the fixed d^2 convention.
inline double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b,
                               bool loss_aware_normalization = false) {
  if (a.d != b.d) throw std::invalid_argument("process_fidelity: dimension mismatch");
  const Complex overlap = (a.beta.array() * b.beta.array().conjugate()).sum();
  double norm = static_cast<double>(a.d) * static_cast<double>(a.d);
  if (loss_aware_normalization) {
    const double na = std::real((a.beta.array() * a.beta.array().conjugate()).sum());
    const double nb = std::real((b.beta.array() * b.beta.array().conjugate()).sum());
    norm = std::sqrt(na * nb);
  }
  if (std::abs(overlap.imag()) > 1e-8 * std::max(1.0, std::abs(overlap.real())))
    throw std::runtime_error("process_fidelity: non-negligible imaginary part");
  return overlap.real() / norm;
}

// Mean population kept in the qudit subspace: (1/d) tr eps(I_d); 1 for
// trace-preserving channels.
inline double alpha_avg(const ProcessMatrix& p) {
  Complex acc = 0.0;
  for (int u = 0; u < p.d; ++u) acc += p.block(u, u).trace();
  return acc.real() / static_cast<double>(p.d);
}

// F_avg = (d F_p + alpha) / (d + 1); reduces to the trace-preserving relation
// at alpha = 1.
inline double avg_gate_fidelity_formula(double f_p, double alpha, int d) {
  if (d < 1) throw std::invalid_argument("avg_gate_fidelity_formula: d must be >= 1");
  return (d * f_p + alpha) / (d + 1.0);
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Haar-uniform Monte-Carlo estimate of the average gate fidelity
// int dpsi <psi| U_T^dag eps(|psi><psi|) U_T |psi>.
inline MonteCarloEstimate avg_gate_fidelity_montecarlo(const ProcessMatrix& p, const Matrix& u_target,
                                                       int n_samples, std::uint64_t seed) {
  if (u_target.rows() != p.d || u_target.cols() != p.d)
    throw std::invalid_argument("avg_gate_fidelity_montecarlo: dimension mismatch");
  if (n_samples < 1) throw std::invalid_argument("avg_gate_fidelity_montecarlo: n_samples >= 1");
  auto eng = make_engine(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Vector psi = haar_state(p.d, eng);
    const Vector phi = u_target * psi;
    const DensityMatrix eps = p.apply(psi * psi.adjoint());
    const double f = std::real((phi.adjoint() * eps * phi)(0, 0));
    sum += f;
    sum_sq += f * f;
  }
  MonteCarloEstimate est;
  est.mean = sum / n_samples;
  const double var = std::max(0.0, sum_sq / n_samples - est.mean * est.mean);
  est.std_error = std::sqrt(var / n_samples);
  return est;
}

struct TwoMomentCheck {
  Complex mc_value;
  Complex closed_form;  // [tr(MN) + tr(M) tr(N)] / (d (d+1))
  double std_error = 0.0;
};

// Haar second-moment identity int dpsi <psi|M|psi><psi|N|psi>.
inline TwoMomentCheck haar_two_moment_check(const Matrix& m, const Matrix& n, int n_samples,
                                            std::uint64_t seed) {
  if (m.rows() != m.cols() || n.rows() != n.cols() || m.rows() != n.rows())
    throw std::invalid_argument("haar_two_moment_check: square matrices of equal dim required");
  const int d = static_cast<int>(m.rows());
  auto eng = make_engine(seed);
  Complex sum = 0.0;
  double sum_sq_re = 0.0, sum_sq_im = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Vector psi = haar_state(d, eng);
    const Complex val = (psi.adjoint() * m * psi)(0, 0) * (psi.adjoint() * n * psi)(0, 0);
    sum += val;
    sum_sq_re += val.real() * val.real();
    sum_sq_im += val.imag() * val.imag();
  }
  TwoMomentCheck out;
  out.mc_value = sum / static_cast<double>(n_samples);
  out.closed_form =
      ((m * n).trace() + m.trace() * n.trace()) / (static_cast<double>(d) * (d + 1.0));
  const double var_re = std::max(0.0, sum_sq_re / n_samples - out.mc_value.real() * out.mc_value.real());
  const double var_im = std::max(0.0, sum_sq_im / n_samples - out.mc_value.imag() * out.mc_value.imag());
  out.std_error = std::sqrt((var_re + var_im) / n_samples);
  return out;
}

}  // namespace qoc
