// Core scalar/matrix aliases and small dense-matrix predicates shared by the
// whole library. Everything is built on Eigen dense types.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace qoc {

using Real = double;
using Complex = std::complex<double>;

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

constexpr Real kHermitianTol = 1e-12;
constexpr Real kUnitaryTol = 1e-10;

inline constexpr Complex imag_unit() { return Complex(0.0, 1.0); }

template <typename Derived>
Real max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

template <typename DerivedA, typename DerivedB>
Real max_abs_diff(const Eigen::MatrixBase<DerivedA>& a,
                  const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, Real tol = kHermitianTol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() < tol;
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& m, Real tol = kUnitaryTol) {
  if (m.rows() != m.cols()) return false;
  const Matrix gram = m.adjoint() * m;
  return (gram - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() < tol;
}

// (A + A†)/2, used to scrub roundoff off operators that are Hermitian by
// construction.
inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

template <typename DerivedA, typename DerivedB>
Matrix kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace qoc
