// Deterministic seeding utilities and Haar-measure samplers.
#pragma once

#include <cstdint>
#include <random>

#include "qoc/types.hpp"

namespace qoc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stable per-shard seed from a master seed, so parallel shards stay
// reproducible regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vector complex_normal_vector(int d, std::mt19937_64& eng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) {
    const double re = gauss(eng);
    const double im = gauss(eng);
    v(i) = Complex(re, im);
  }
  return v;
}

// Haar-uniform pure state: normalized complex-normal vector.
inline Vector haar_state(int d, std::mt19937_64& eng) {
  Vector v = complex_normal_vector(d, eng);
  return v / v.norm();
}

inline Matrix ginibre_matrix(int rows, int cols, std::mt19937_64& eng) {
  Matrix g(rows, cols);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = Complex(gauss(eng), gauss(eng));
  return g;
}

// Haar-uniform unitary via QR of a Ginibre matrix with the R-diagonal phase
// fix.
inline Matrix haar_unitary(int d, std::mt19937_64& eng) {
  const Matrix g = ginibre_matrix(d, d, eng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    const Complex rii = r(i, i);
    q.col(i) *= (std::abs(rii) > 0) ? rii / std::abs(rii) : Complex(1.0);
  }
  return q;
}

}  // namespace qoc
