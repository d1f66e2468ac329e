// Piecewise-constant propagation of the lattice Hamiltonian.
//
// Shifting the lattice phase is a diagonal gauge transform in the momentum
// basis: H(phi) = T(phi) H(0) T(phi)^dag with T(phi) = diag(e^{i l phi}).
// Each step propagator is therefore U_j = T(phi_j) U0 T(phi_j)^dag with a
// single exponential U0 = exp(-i dt H(0)) shared by every step, and
// dU_j/dphi_j = i [L, U_j] with L = diag(l).
#pragma once

#include <Eigen/Eigenvalues>

#include <stdexcept>

#include "qoc/lattice.hpp"
#include "qoc/ramp.hpp"
#include "qoc/types.hpp"

namespace qoc {

// exp(-i dt H) for Hermitian H via eigendecomposition.
inline Matrix step_propagator(const Matrix& h, double dt) {
  if (h.rows() != h.cols()) throw std::invalid_argument("step_propagator: H must be square");
  if (!is_hermitian(h, 1e-10)) throw std::invalid_argument("step_propagator: H must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("step_propagator: eigensolver failed");
  const Vector phases =
      (-imag_unit() * dt * es.eigenvalues().cast<Complex>().array()).exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Per-depth cache shared by evolution and the exact gradient.
struct StepBasis {
  LatticeConfig cfg;
  double dt = 0.0;
  RealVector momenta;     // diag(l)
  RealVector eigvals;     // of H(0)
  Matrix eigvecs;
  Matrix u0;              // exp(-i dt H(0))
  Matrix phase_kernel;    // i [L, U0]
};

inline StepBasis make_step_basis(const LatticeConfig& cfg, double dt) {
  cfg.validate();
  StepBasis b;
  b.cfg = cfg;
  b.dt = dt;
  b.momenta = momentum_numbers(cfg.l_max);
  Eigen::SelfAdjointEigenSolver<Matrix> es(build_hamiltonian(cfg, 0.0));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("make_step_basis: eigensolver failed");
  b.eigvals = es.eigenvalues();
  b.eigvecs = es.eigenvectors();
  const Vector phases = (-imag_unit() * dt * b.eigvals.cast<Complex>().array()).exp();
  b.u0 = b.eigvecs * phases.asDiagonal() * b.eigvecs.adjoint();
  const int n = cfg.dim();
  b.phase_kernel.resize(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      b.phase_kernel(r, c) = imag_unit() * (b.momenta(r) - b.momenta(c)) * b.u0(r, c);
  return b;
}

// e^{i l phi} for the integer momentum ladder, via a power recurrence from
// e^{i phi} (momenta are consecutive integers -l_max..l_max).
inline void fill_gauge_phases(const RealVector& momenta, double phi, Vector& out) {
  const int n = static_cast<int>(momenta.size());
  out.resize(n);
  const int mid = n / 2;
  const Complex base(std::cos(phi), std::sin(phi));
  out(mid) = 1.0;
  for (int i = 1; i <= mid; ++i) {
    out(mid + i) = out(mid + i - 1) * base;
    out(mid - i) = std::conj(out(mid + i));
  }
}

inline Vector gauge_phases(const RealVector& momenta, double phi) {
  Vector t;
  fill_gauge_phases(momenta, phi, t);
  return t;
}

// U_f * cols for the piecewise ramp; cols may be a thin slab (e.g. the
// subspace embedding) or the identity for the full propagator.
inline Matrix propagate_columns(const StepBasis& basis, const RealVector& phases,
                                const Matrix& cols) {
  Matrix q = cols;
  Matrix scratch(q.rows(), q.cols());
  Vector t;
  for (int j = 0; j < phases.size(); ++j) {
    fill_gauge_phases(basis.momenta, phases(j), t);
    q.array().colwise() *= t.conjugate().array();
    scratch.noalias() = basis.u0 * q;
    scratch.array().colwise() *= t.array();
    q.swap(scratch);
  }
  return q;
}

// Full propagator U_f = U_k ... U_1 over the sampled ramp.
inline Matrix evolve(const PhaseRamp& ramp, const LatticeConfig& cfg) {
  ramp.validate();
  const StepBasis basis = make_step_basis(cfg, ramp.dt);
  return propagate_columns(basis, sampled_phases(ramp), Matrix::Identity(cfg.dim(), cfg.dim()));
}

inline Vector evolve_state(const PhaseRamp& ramp, const LatticeConfig& cfg, const Vector& state) {
  ramp.validate();
  if (state.size() != cfg.dim()) throw std::invalid_argument("evolve_state: dimension mismatch");
  const StepBasis basis = make_step_basis(cfg, ramp.dt);
  return propagate_columns(basis, sampled_phases(ramp), state);
}

// d x d block of U at the subspace rows/columns; sub-unitary when population
// leaks out of the subspace.
inline Matrix project_to_subspace(const Matrix& u, const SubspaceMap& map) {
  map.validate();
  if (u.rows() != u.cols()) throw std::invalid_argument("project_to_subspace: U must be square");
  const int n = static_cast<int>(u.rows());
  if (n % 2 == 0) throw std::invalid_argument("project_to_subspace: basis size must be odd");
  const int l_max = (n - 1) / 2;
  const int d = map.d();
  Matrix out(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      out(r, c) = u(map.position(map.indices[r], l_max), map.position(map.indices[c], l_max));
  return out;
}

}  // namespace qoc
