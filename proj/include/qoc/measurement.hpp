// Time-of-flight population measurement simulator with experimental
// imperfections: lattice-depth miscalibration and jitter, quasimomentum
// spread of the finite-size condensate (an incoherent classical mixture over
// q), and finite atom number (multinomial shot noise per image).
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "qoc/lattice.hpp"
#include "qoc/propagate.hpp"
#include "qoc/ramp.hpp"
#include "qoc/rng.hpp"
#include "qoc/types.hpp"

namespace qoc {

struct NoiseModel {
  double depth_offset = 0.0;        // systematic additive error on s
  double depth_jitter_sigma = 0.0;  // per-run Gaussian noise on s
  double quasimomentum_sigma = 0.0; // per-run Gaussian spread of q
  long atom_number = 0;             // atoms per image; 0 means exact populations
  std::uint64_t seed = 0;

  void validate() const {
    if (depth_jitter_sigma < 0 || quasimomentum_sigma < 0)
      throw std::invalid_argument("NoiseModel: sigmas must be >= 0");
    if (atom_number < 0) throw std::invalid_argument("NoiseModel: atom_number must be >= 0");
  }

  bool deterministic() const {
    return depth_jitter_sigma == 0 && quasimomentum_sigma == 0 && atom_number == 0;
  }

  static NoiseModel none() { return NoiseModel{}; }

  // Documented experimental preset: depth offset drawn uniformly in +-0.05,
  // sigma_q = 0.01, 1e4 atoms per image.
  static NoiseModel experimental(std::uint64_t seed) {
    NoiseModel n;
    auto eng = make_engine(derive_seed(seed, 0xEF5E7));
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    n.depth_offset = uni(eng);
    n.quasimomentum_sigma = 0.01;
    n.atom_number = 10000;
    n.seed = seed;
    return n;
  }
};

// Multinomial counts via sequential conditional binomials.
inline std::vector<long> multinomial_sample(const RealVector& probs, long trials,
                                            std::mt19937_64& eng) {
  const int k = static_cast<int>(probs.size());
  std::vector<long> counts(k, 0);
  double remaining = probs.sum();
  long left = trials;
  for (int i = 0; i < k && left > 0; ++i) {
    if (remaining <= 0) break;
    const double p = std::min(1.0, std::max(0.0, probs(i) / remaining));
    std::binomial_distribution<long> bin(left, p);
    counts[i] = bin(eng);
    left -= counts[i];
    remaining -= probs(i);
  }
  if (left > 0) counts[k - 1] += left;
  return counts;
}

// Measured momentum populations of a state: |c_l|^2 sampled with atom_number
// multinomial trials, normalized back to frequencies. atom_number = 0 returns
// the exact populations.
inline RealVector measure_populations(const Vector& state, const NoiseModel& noise,
                                      std::mt19937_64& eng) {
  noise.validate();
  RealVector probs = state.cwiseAbs2();
  const double total = probs.sum();
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("measure_populations: state must be normalized");
  probs /= total;
  if (noise.atom_number == 0) return probs;
  const std::vector<long> counts = multinomial_sample(probs, noise.atom_number, eng);
  RealVector freq(probs.size());
  for (int i = 0; i < probs.size(); ++i)
    freq(i) = static_cast<double>(counts[i]) / static_cast<double>(noise.atom_number);
  return freq;
}

inline RealVector measure_populations(const Vector& state, const NoiseModel& noise,
                                      std::uint64_t run_index = 0) {
  auto eng = make_engine(derive_seed(noise.seed, run_index ^ 0x6D65A5ULL));
  return measure_populations(state, noise, eng);
}

// One experimental run: draw (s + offset + jitter, q + N(0, sigma_q)) and
// evolve the state with those parameters. Zero noise reduces to evolve_state.
inline Vector evolve_with_noise(const PhaseRamp& ramp, const LatticeConfig& cfg,
                                const NoiseModel& noise, const Vector& state,
                                std::mt19937_64& eng) {
  noise.validate();
  LatticeConfig run_cfg = cfg;
  run_cfg.depth += noise.depth_offset;
  if (noise.depth_jitter_sigma > 0) {
    std::normal_distribution<double> jitter(0.0, noise.depth_jitter_sigma);
    run_cfg.depth += jitter(eng);
  }
  if (noise.quasimomentum_sigma > 0) {
    std::normal_distribution<double> spread(0.0, noise.quasimomentum_sigma);
    run_cfg.quasimomentum =
        std::clamp(cfg.quasimomentum + spread(eng), -0.5, 0.5);
  }
  run_cfg.depth = std::max(run_cfg.depth, 1e-9);
  return evolve_state(ramp, run_cfg, state);
}

inline Vector evolve_with_noise(const PhaseRamp& ramp, const LatticeConfig& cfg,
                                const NoiseModel& noise, const Vector& state,
                                std::uint64_t run_index = 0) {
  auto eng = make_engine(derive_seed(noise.seed, run_index));
  return evolve_with_noise(ramp, cfg, noise, state, eng);
}

}  // namespace qoc
