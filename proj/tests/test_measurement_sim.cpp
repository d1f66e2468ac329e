#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qoc/measurement.hpp"
#include "test_helpers.hpp"

using namespace qoc;

TEST_CASE("measure_populations") {
  const int l_max = 4, n = 2 * l_max + 1;
  SUBCASE("pure momentum state is noiseless in any model") {
    Vector psi = Vector::Zero(n);
    psi(l_max) = 1.0;  // |0>
    NoiseModel noise;
    noise.atom_number = 500;
    noise.seed = 3;
    const RealVector p = measure_populations(psi, noise, 0);
    CHECK(p(l_max) == doctest::Approx(1.0));
    CHECK(p.sum() == doctest::Approx(1.0));
  }
  SUBCASE("exact populations for the equal superposition") {
    Vector psi = Vector::Zero(n);
    psi(l_max - 1) = M_SQRT1_2;
    psi(l_max + 1) = M_SQRT1_2;
    const RealVector p = measure_populations(psi, NoiseModel::none(), 0);
    CHECK(p(l_max - 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p(l_max + 1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("shot noise follows binomial statistics") {
    Vector psi = Vector::Zero(n);
    psi(l_max - 1) = M_SQRT1_2;
    psi(l_max + 1) = M_SQRT1_2;
    NoiseModel noise;
    noise.atom_number = 10000;
    noise.seed = 7;
    const int trials = 1000;
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const RealVector p = measure_populations(psi, noise, t);
      sum += p(l_max - 1);
      sum_sq += p(l_max - 1) * p(l_max - 1);
    }
    const double mean = sum / trials;
    const double std_dev = std::sqrt(std::max(0.0, sum_sq / trials - mean * mean));
    const double predicted = std::sqrt(0.25 / noise.atom_number);  // 0.005
    CHECK(std::abs(mean - 0.5) < 5e-4);
    CHECK(std::abs(std_dev - predicted) / predicted < 0.2);
  }
  SUBCASE("unnormalized states rejected") {
    Vector psi = Vector::Zero(n);
    psi(0) = 0.5;
    CHECK_THROWS_AS(measure_populations(psi, NoiseModel::none(), 0), std::invalid_argument);
  }
}

TEST_CASE("evolve_with_noise") {
  const LatticeConfig cfg{5.0, 0.0, 6};
  PhaseRamp ramp = PhaseRamp::zero(2, 1.0, 0.05);
  ramp.a(0) = 0.1;
  ramp.b(1) = -0.07;
  auto eng0 = make_engine(5);
  const Vector psi = haar_state(cfg.dim(), eng0);

  SUBCASE("zero noise reduces to plain evolution") {
    const Vector a = evolve_with_noise(ramp, cfg, NoiseModel::none(), psi, 0);
    const Vector b = evolve_state(ramp, cfg, psi);
    CHECK((a - b).norm() < 1e-12);
  }
  SUBCASE("a pure depth offset equals evolution at the offset depth") {
    NoiseModel noise;
    noise.depth_offset = 0.3;
    const Vector a = evolve_with_noise(ramp, cfg, noise, psi, 0);
    LatticeConfig shifted = cfg;
    shifted.depth += 0.3;
    const Vector b = evolve_state(ramp, shifted, psi);
    CHECK((a - b).norm() < 1e-12);
  }
  SUBCASE("seed determinism") {
    NoiseModel noise;
    noise.depth_jitter_sigma = 0.05;
    noise.quasimomentum_sigma = 0.02;
    noise.seed = 11;
    const Vector a = evolve_with_noise(ramp, cfg, noise, psi, 4);
    const Vector b = evolve_with_noise(ramp, cfg, noise, psi, 4);
    CHECK((a - b).norm() == 0.0);
    const Vector c = evolve_with_noise(ramp, cfg, noise, psi, 5);
    CHECK((a - c).norm() > 0.0);
  }
  SUBCASE("quasimomentum draws average to the incoherent mixture") {
    NoiseModel noise;
    noise.quasimomentum_sigma = 0.02;
    noise.seed = 13;
    const int draws = 10000;
    Matrix mc_avg = Matrix::Zero(cfg.dim(), cfg.dim());
    for (int t = 0; t < draws; ++t) {
      const Vector out = evolve_with_noise(ramp, cfg, noise, psi, t);
      mc_avg += out * out.adjoint();
    }
    mc_avg /= static_cast<double>(draws);
    // Direct quadrature over the Gaussian q-distribution (trapezoid, +-5
    // sigma, fine grid).
    const int nodes = 201;
    Matrix quad = Matrix::Zero(cfg.dim(), cfg.dim());
    double weight_sum = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double q = -5.0 * noise.quasimomentum_sigma +
                       10.0 * noise.quasimomentum_sigma * i / (nodes - 1);
      const double wgt = std::exp(-q * q / (2.0 * noise.quasimomentum_sigma *
                                            noise.quasimomentum_sigma));
      LatticeConfig qcfg = cfg;
      qcfg.quasimomentum = q;
      const Vector out = evolve_state(ramp, qcfg, psi);
      quad += wgt * out * out.adjoint();
      weight_sum += wgt;
    }
    quad /= weight_sum;
    CHECK(max_abs_diff(mc_avg, quad) < 1e-3);
  }
  SUBCASE("quasimomentum spread degrades purity on distant-momentum pairs") {
    // Superposition on {|-2>, |2>}: the q-averaged state loses coherence.
    Vector psi2 = Vector::Zero(cfg.dim());
    psi2(6 - 2) = M_SQRT1_2;
    psi2(6 + 2) = M_SQRT1_2;
    PhaseRamp hold = PhaseRamp::zero(1, 3.0, 0.05);
    NoiseModel noise;
    noise.quasimomentum_sigma = 0.02;
    noise.seed = 17;
    Matrix avg = Matrix::Zero(cfg.dim(), cfg.dim());
    const int draws = 400;
    for (int t = 0; t < draws; ++t) {
      const Vector out = evolve_with_noise(hold, cfg, noise, psi2, t);
      avg += out * out.adjoint();
    }
    avg /= static_cast<double>(draws);
    const double p_noisy = std::real((avg * avg).trace());
    CHECK(p_noisy < 0.99);  // pure would be 1
  }
}

TEST_CASE("experimental preset") {
  const NoiseModel a = NoiseModel::experimental(1);
  const NoiseModel b = NoiseModel::experimental(1);
  const NoiseModel c = NoiseModel::experimental(2);
  CHECK(a.depth_offset == b.depth_offset);
  CHECK(std::abs(a.depth_offset) <= 0.05);
  CHECK(std::abs(c.depth_offset) <= 0.05);
  CHECK(a.quasimomentum_sigma == 0.01);
  CHECK(a.atom_number == 10000);
}
