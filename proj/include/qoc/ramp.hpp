// Fourier parameterization of the lattice-phase control ramp:
//   phi(t) = a0 + sum_n a_n cos(2 pi n f0 t) + b_n sin(2 pi n f0 t), f0 = 1/t_f.
// The ramp is sampled piecewise-constant on k = t_f/dt steps at the left
// endpoints t_j = j*dt.
#pragma once

#include <cmath>
#include <stdexcept>

#include "qoc/types.hpp"

namespace qoc {

struct PhaseRamp {
  double a0 = 0.0;
  RealVector a;  // cosine coefficients a_1..a_nmax, radians
  RealVector b;  // sine coefficients b_1..b_nmax, radians
  double t_f = 1.0;  // duration, units of hbar/E_L
  double dt = 1.0;   // step, same units

  int n_max() const { return static_cast<int>(a.size()); }

  int steps() const {
    const double ratio = t_f / dt;
    const int k = static_cast<int>(std::lround(ratio));
    if (k < 1 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
      throw std::invalid_argument("PhaseRamp: t_f/dt must be a positive integer");
    return k;
  }

  void validate() const {
    if (a.size() != b.size())
      throw std::invalid_argument("PhaseRamp: a and b must have equal length");
    if (!(t_f > 0) || !(dt > 0))
      throw std::invalid_argument("PhaseRamp: t_f and dt must be positive");
    (void)steps();
  }

  static PhaseRamp zero(int n_max, double t_f, double dt) {
    PhaseRamp r;
    r.a = RealVector::Zero(n_max);
    r.b = RealVector::Zero(n_max);
    r.t_f = t_f;
    r.dt = dt;
    return r;
  }
};

// Number of harmonics below a frequency cap: n_max = ceil(f_max * t_f). Both
// arguments in the same unit system (Hz and seconds, or dimensionless pairs).
inline int harmonic_count(double f_max, double t_f) {
  if (!(f_max > 0) || !(t_f > 0))
    throw std::invalid_argument("harmonic_count: arguments must be positive");
  // Guard against exact integer products landing just above the integer.
  return static_cast<int>(std::ceil(f_max * t_f - 1e-9));
}

inline double sample_ramp(const PhaseRamp& ramp, int j) {
  ramp.validate();
  const int k = ramp.steps();
  if (j < 0 || j >= k) throw std::out_of_range("sample_ramp: step index out of range");
  const double t = j * ramp.dt;
  const double w0 = 2.0 * M_PI / ramp.t_f;
  double phi = ramp.a0;
  for (int n = 1; n <= ramp.n_max(); ++n)
    phi += ramp.a(n - 1) * std::cos(w0 * n * t) + ramp.b(n - 1) * std::sin(w0 * n * t);
  return phi;
}

// All k piecewise-constant phase values in one pass.
inline RealVector sampled_phases(const PhaseRamp& ramp) {
  ramp.validate();
  const int k = ramp.steps();
  const double w0 = 2.0 * M_PI / ramp.t_f;
  RealVector phi = RealVector::Constant(k, ramp.a0);
  for (int n = 1; n <= ramp.n_max(); ++n) {
    const double wn = w0 * n;
    for (int j = 0; j < k; ++j) {
      const double t = j * ramp.dt;
      phi(j) += ramp.a(n - 1) * std::cos(wn * t) + ramp.b(n - 1) * std::sin(wn * t);
    }
  }
  return phi;
}

struct SpectrumPoint {
  double frequency;  // cycles per unit of t_f's time system
  double magnitude;  // |DFT| of the sampled phases
};

// Single-sided discrete spectrum of the sampled ramp, bins m = 0..k/2 at
// frequency m/t_f. Harmonic content above n_max is identically zero.
inline std::vector<SpectrumPoint> ramp_spectrum(const PhaseRamp& ramp) {
  const RealVector phi = sampled_phases(ramp);
  const int k = static_cast<int>(phi.size());
  std::vector<SpectrumPoint> spec;
  spec.reserve(k / 2 + 1);
  for (int m = 0; m <= k / 2; ++m) {
    Complex acc = 0.0;
    for (int j = 0; j < k; ++j)
      acc += phi(j) * std::exp(-imag_unit() * (2.0 * M_PI * m * j / k));
    spec.push_back({m / ramp.t_f, std::abs(acc)});
  }
  return spec;
}

}  // namespace qoc
