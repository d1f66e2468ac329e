// Momentum-basis model of the phase-shaken optical lattice.
//
// The basis is the plane-wave ladder |l>, l = -l_max..+l_max (N = 2*l_max+1
// states). In dimensionless units the Hamiltonian is
//   H(phi) : diagonal (l+q)^2, couplings -(s/4) e^{+i phi} from l-1 to l and
//            -(s/4) e^{-i phi} from l+1 to l.
#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "qoc/types.hpp"
#include "qoc/units.hpp"

namespace qoc {

struct LatticeConfig {
  double depth = 5.0;         // dimensionless lattice depth s
  double quasimomentum = 0.0; // q in units of k_L
  int l_max = 10;

  int dim() const { return 2 * l_max + 1; }

  void validate() const {
    if (!(depth > 0)) throw std::invalid_argument("LatticeConfig: depth must be > 0");
    if (std::abs(quasimomentum) > 0.5)
      throw std::invalid_argument("LatticeConfig: |quasimomentum| must be <= 0.5");
    if (l_max < 1) throw std::invalid_argument("LatticeConfig: l_max must be >= 1");
  }
};

// Ordered momentum indices that form the qudit computational basis.
struct SubspaceMap {
  std::vector<int> indices;

  int d() const { return static_cast<int>(indices.size()); }

  void validate() const {
    if (indices.empty()) throw std::invalid_argument("SubspaceMap: empty");
    for (std::size_t i = 1; i < indices.size(); ++i)
      if (indices[i] <= indices[i - 1])
        throw std::invalid_argument("SubspaceMap: indices must be strictly increasing");
  }

  // Truncation must leave at least two guard momenta beyond the subspace.
  void validate_against(const LatticeConfig& cfg) const {
    validate();
    int max_abs_index = 0;
    for (int l : indices) max_abs_index = std::max(max_abs_index, std::abs(l));
    if (cfg.l_max < 2 + max_abs_index)
      throw std::invalid_argument("SubspaceMap: l_max must be >= 2 + max |subspace index|");
  }

  // Row position of momentum l inside the truncated basis.
  int position(int l, int l_max) const {
    if (std::abs(l) > l_max) throw std::out_of_range("SubspaceMap: index outside basis");
    return l + l_max;
  }
};

// N x d matrix whose columns are the subspace basis vectors embedded in the
// truncated momentum basis.
inline Matrix embedding_matrix(const SubspaceMap& map, int l_max) {
  map.validate();
  const int n = 2 * l_max + 1;
  Matrix e = Matrix::Zero(n, map.d());
  for (int c = 0; c < map.d(); ++c) e(map.position(map.indices[c], l_max), c) = 1.0;
  return e;
}

inline Vector embed_state(const Vector& sub, const SubspaceMap& map, int l_max) {
  if (sub.size() != map.d()) throw std::invalid_argument("embed_state: dimension mismatch");
  return embedding_matrix(map, l_max) * sub;
}

inline Matrix build_hamiltonian(const LatticeConfig& cfg, double phi) {
  cfg.validate();
  const int n = cfg.dim();
  const double q = cfg.quasimomentum;
  const Complex hop = -(cfg.depth / 4.0) * std::exp(imag_unit() * phi);
  Matrix h = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double l = static_cast<double>(i - cfg.l_max);
    h(i, i) = (l + q) * (l + q);
    if (i > 0) h(i, i - 1) = hop;             // from l-1 to l
    if (i + 1 < n) h(i, i + 1) = std::conj(hop);  // from l+1 to l
  }
  return h;
}

// Momentum quantum number of each basis row, as a real vector diag(l).
inline RealVector momentum_numbers(int l_max) {
  RealVector m(2 * l_max + 1);
  for (int i = 0; i < m.size(); ++i) m(i) = static_cast<double>(i - l_max);
  return m;
}

struct BandGapTime {
  double gap;            // energy gap between the two lowest states, in E_L
  double dimensionless;  // T_0 in units of hbar/E_L
  double seconds;        // T_0 in seconds
};

// Characteristic timescale T_0 = 1/nu of the two lowest lattice eigenstates at
// q = 0, nu = dE/h.
inline BandGapTime band_gap_timescale(const LatticeConfig& cfg, const UnitTable& units = {}) {
  if (cfg.quasimomentum != 0.0)
    throw std::invalid_argument("band_gap_timescale: defined at q = 0");
  Eigen::SelfAdjointEigenSolver<Matrix> es(build_hamiltonian(cfg, 0.0));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("band_gap_timescale: eigensolver failed");
  const double gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  BandGapTime out;
  out.gap = gap;
  out.dimensionless = 2.0 * M_PI / gap;
  out.seconds = units.dimensionless_to_seconds(out.dimensionless);
  return out;
}

}  // namespace qoc
