// Built-in target unitaries on the qudit subspace.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "qoc/lattice.hpp"
#include "qoc/types.hpp"

namespace qoc {

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, -imag_unit(), imag_unit(), 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline Matrix hadamard() { return (pauli_x() + pauli_z()) / std::sqrt(2.0); }

// W = (Y + Z)/sqrt(2); together with H it reads out both phase quadratures.
inline Matrix w_gate() { return (pauli_y() + pauli_z()) / std::sqrt(2.0); }

inline Matrix identity_gate(int d) { return Matrix::Identity(d, d); }

// Qutrit X on levels 1 and 2, identity on level 0.
inline Matrix qutrit_x12() {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1;
  m(1, 2) = 1;
  m(2, 1) = 1;
  return m;
}

// Discrete Fourier transform, entries omega^{uv}/sqrt(d); equals H for d = 2.
inline Matrix dft_gate(int d) {
  if (d < 2) throw std::invalid_argument("dft_gate: d must be >= 2");
  Matrix m(d, d);
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v)
      m(u, v) = std::exp(imag_unit() * (2.0 * M_PI * u * v / d)) / std::sqrt(double(d));
  return m;
}

// DFT with strictly-upper entries scaled by -i and strictly-lower by +i.
// Equals W for d = 2; for d > 2 it is generally not unitary and is used as a
// known measurement map only.
inline Matrix modified_dft_gate(int d) {
  Matrix m = dft_gate(d);
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v) {
      if (u < v) m(u, v) *= -imag_unit();
      if (u > v) m(u, v) *= imag_unit();
    }
  return m;
}

struct TargetGate {
  std::string name;
  Matrix matrix;
  SubspaceMap subspace;

  int d() const { return static_cast<int>(matrix.rows()); }

  void validate() const {
    subspace.validate();
    if (matrix.rows() != matrix.cols() || matrix.rows() != subspace.d())
      throw std::invalid_argument("TargetGate: matrix dimension must match subspace");
    if (!is_unitary(matrix, 1e-12))
      throw std::invalid_argument("TargetGate: matrix must be unitary");
  }
};

inline TargetGate make_target(const std::string& name, const SubspaceMap& subspace) {
  const int d = subspace.d();
  Matrix m;
  if (name == "X") m = pauli_x();
  else if (name == "Y") m = pauli_y();
  else if (name == "Z") m = pauli_z();
  else if (name == "H") m = hadamard();
  else if (name == "W") m = w_gate();
  else if (name == "I") m = identity_gate(d);
  else if (name == "X12") m = qutrit_x12();
  else if (name == "DFT") m = dft_gate(d);
  else throw std::invalid_argument("make_target: unknown gate name '" + name + "'");
  TargetGate g{name, m, subspace};
  g.validate();
  return g;
}

}  // namespace qoc
