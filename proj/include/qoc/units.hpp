// Conversion between laboratory units (seconds, hertz) and the dimensionless
// lattice units used internally: energies in E_L = hbar^2 k_L^2 / (2m) with
// k_L = 4*pi/lambda, times in hbar/E_L.
#pragma once

#include <cmath>
#include <stdexcept>

namespace qoc {

struct UnitTable {
  double wavelength_m = 1064e-9;
  double mass_kg = 86.909180531 * 1.66053906660e-27;  // 87Rb

  static constexpr double hbar = 1.054571817e-34;  // J s

  double lattice_wavenumber() const { return 4.0 * M_PI / wavelength_m; }

  // E_L in joules.
  double lattice_energy() const {
    const double k = lattice_wavenumber();
    return hbar * hbar * k * k / (2.0 * mass_kg);
  }

  // One dimensionless time unit, in seconds.
  double time_unit_s() const { return hbar / lattice_energy(); }

  double seconds_to_dimensionless(double t_s) const { return t_s / time_unit_s(); }
  double dimensionless_to_seconds(double t) const { return t * time_unit_s(); }

  // Frequencies in cycles per unit time; f_Hz * time_unit gives cycles per
  // dimensionless unit.
  double hz_to_dimensionless(double f_hz) const { return f_hz * time_unit_s(); }
  double dimensionless_to_hz(double f) const { return f / time_unit_s(); }

  void validate() const {
    if (!(wavelength_m > 0) || !(mass_kg > 0))
      throw std::invalid_argument("UnitTable: wavelength and mass must be positive");
  }
};

}  // namespace qoc
