#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qoc/tomography.hpp"
#include "test_helpers.hpp"

using namespace qoc;

namespace {

// Exact noiseless dataset for a window-supported density matrix, bypassing
// any gate dynamics: populations diag(B rho B^dag) per probe.
TomographyDataset exact_dataset(const Matrix& rho_window, const ProbeModel& model) {
  TomographyDataset data;
  for (std::size_t p = 0; p < model.maps.size(); ++p) {
    TomographyRecord rec;
    rec.probe = static_cast<int>(p);
    rec.populations = (model.maps[p] * rho_window * model.maps[p].adjoint()).diagonal().real();
    rec.shots = 0;
    data.records.push_back(std::move(rec));
  }
  return data;
}

TomographyDataset sampled_dataset(const Matrix& rho_window, const ProbeModel& model, long atoms,
                                  std::uint64_t seed) {
  TomographyDataset data;
  for (std::size_t p = 0; p < model.maps.size(); ++p) {
    RealVector probs = (model.maps[p] * rho_window * model.maps[p].adjoint()).diagonal().real();
    const double out_of_window = std::max(0.0, 1.0 - probs.sum());
    probs = probs.cwiseMax(0.0);
    auto eng = make_engine(derive_seed(seed, p));
    RealVector all = probs;
    if (out_of_window > 1e-12) {
      // fold unmodeled mass into the last outcome to keep the trial count
      all(all.size() - 1) += out_of_window;
    }
    const std::vector<long> counts = multinomial_sample(all, atoms, eng);
    TomographyRecord rec;
    rec.probe = static_cast<int>(p);
    rec.populations.resize(all.size());
    for (int i = 0; i < all.size(); ++i)
      rec.populations(i) = static_cast<double>(counts[i]) / atoms;
    rec.shots = atoms;
    data.records.push_back(std::move(rec));
  }
  return data;
}

}  // namespace

TEST_CASE("build_input_states") {
  SUBCASE("counts") {
    CHECK(build_input_states({{-1, 1}}, 10).states.size() == 4);
    CHECK(build_input_states({{-1, 0, 1}}, 10).states.size() == 9);
  }
  SUBCASE("normalization and overlaps") {
    const InputStateSet set = build_input_states({{-1, 1}}, 10);
    for (const auto& in : set.states) CHECK(std::abs(in.state.norm() - 1.0) < 1e-12);
    const Vector* plus = nullptr;
    const Vector* minus = nullptr;
    for (const auto& in : set.states) {
      if (in.kind == InputKind::Plus) plus = &in.state;
      if (in.kind == InputKind::Minus) minus = &in.state;
    }
    REQUIRE(plus != nullptr);
    REQUIRE(minus != nullptr);
    // <+|-> = (1+i)/2 by direct vector arithmetic, magnitude sqrt(2)/2.
    const Complex overlap = plus->dot(*minus);
    CHECK(std::abs(overlap - Complex(0.5, 0.5)) < 1e-12);
    CHECK(std::abs(std::abs(overlap) - M_SQRT2 / 2.0) < 1e-12);
  }
}

TEST_CASE("reconstruct_eps_buv") {
  auto eng = make_engine(3);
  const int d = 3;
  auto b_mat = [&](int u, int v) {
    Matrix b = Matrix::Zero(d, d);
    b(u, v) = 1.0;
    return b;
  };
  auto plus_state = [&](int u, int v) {
    Vector s = Vector::Zero(d);
    s(u) = M_SQRT1_2;
    s(v) = M_SQRT1_2;
    return s;
  };
  auto minus_state = [&](int u, int v) {
    Vector s = Vector::Zero(d);
    s(u) = M_SQRT1_2;
    s(v) = imag_unit() * M_SQRT1_2;
    return s;
  };
  SUBCASE("identity process returns B_uv") {
    const Vector p = plus_state(0, 2), m = minus_state(0, 2);
    const Matrix got = reconstruct_eps_buv(p * p.adjoint(), m * m.adjoint(), b_mat(0, 0),
                                           b_mat(2, 2));
    CHECK(max_abs_diff(got, b_mat(0, 2)) < 1e-14);
  }
  SUBCASE("unitary process returns U B_uv U^dag") {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix u_mat = haar_unitary(d, eng);
      auto eps = [&](const Matrix& rho) { return Matrix(u_mat * rho * u_mat.adjoint()); };
      for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
          const Vector p = plus_state(a, b), m = minus_state(a, b);
          const Matrix got = reconstruct_eps_buv(eps(p * p.adjoint()), eps(m * m.adjoint()),
                                                 eps(b_mat(a, a)), eps(b_mat(b, b)));
          CHECK(max_abs_diff(got, eps(b_mat(a, b))) < 1e-12);
        }
    }
  }
  SUBCASE("Hadamard channel example") {
    const Matrix h = hadamard();
    auto eps = [&](const Matrix& rho) { return Matrix(h * rho * h.adjoint()); };
    Matrix b01 = Matrix::Zero(2, 2);
    b01(0, 1) = 1.0;
    Vector p(2), m(2);
    p << M_SQRT1_2, M_SQRT1_2;
    m << M_SQRT1_2, imag_unit() * M_SQRT1_2;
    Matrix b00 = Matrix::Zero(2, 2), b11 = Matrix::Zero(2, 2);
    b00(0, 0) = 1.0;
    b11(1, 1) = 1.0;
    const Matrix got =
        reconstruct_eps_buv(eps(p * p.adjoint()), eps(m * m.adjoint()), eps(b00), eps(b11));
    CHECK(max_abs_diff(got, eps(b01)) < 1e-13);
  }
  SUBCASE("adjoint pairing") {
    // eps(B_uv)^dag = eps(B_vu): check the combination against the swapped
    // minus state (|v> + i|u>)/sqrt2 for a Hermiticity-preserving channel.
    const Matrix u_mat = haar_unitary(d, eng);
    auto eps = [&](const Matrix& rho) { return Matrix(u_mat * rho * u_mat.adjoint()); };
    const Vector p = plus_state(1, 2);
    const Vector m_uv = minus_state(1, 2), m_vu = minus_state(2, 1);
    const Matrix e_uv = reconstruct_eps_buv(eps(p * p.adjoint()), eps(m_uv * m_uv.adjoint()),
                                            eps(b_mat(1, 1)), eps(b_mat(2, 2)));
    const Matrix e_vu = reconstruct_eps_buv(eps(p * p.adjoint()), eps(m_vu * m_vu.adjoint()),
                                            eps(b_mat(2, 2)), eps(b_mat(1, 1)));
    CHECK(max_abs_diff(e_uv.adjoint(), e_vu) < 1e-8);
  }
}

TEST_CASE("purity and state_fidelity") {
  auto eng = make_engine(5);
  SUBCASE("pure and maximally mixed") {
    const Vector psi = haar_state(4, eng);
    CHECK(purity(psi * psi.adjoint()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(purity(Matrix::Identity(2, 2) * 0.5) == doctest::Approx(0.5));
  }
  SUBCASE("purity equals the eigenvalue sum of squares") {
    const Matrix rho = qoc_test::random_density(5, eng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    CHECK(purity(rho) == doctest::Approx(es.eigenvalues().squaredNorm()).epsilon(1e-12));
  }
  SUBCASE("fidelity of equal and orthogonal pure states") {
    const Vector psi = haar_state(3, eng);
    const Matrix rho = psi * psi.adjoint();
    CHECK(state_fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-8));
    Vector phi = Vector::Zero(3);
    phi(0) = 1.0;
    Vector chi = Vector::Zero(3);
    chi(1) = 1.0;
    CHECK(state_fidelity(phi * phi.adjoint(), chi * chi.adjoint()) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("pure-target reduction and symmetry") {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix rho = qoc_test::random_density(4, eng);
      const Vector psi = haar_state(4, eng);
      const Matrix target = psi * psi.adjoint();
      const double direct = std::real((psi.adjoint() * rho * psi)(0, 0));
      // Square roots of near-zero eigenvalues cap the accuracy around 1e-8.
      CHECK(std::abs(state_fidelity(rho, target) - direct) < 1e-7);
      const Matrix sigma = qoc_test::random_density(4, eng);
      CHECK(std::abs(state_fidelity(rho, sigma) - state_fidelity(sigma, rho)) < 1e-10);
    }
  }
}

TEST_CASE("mle_state_tomography") {
  const LatticeConfig cfg{5.3, 0.0, 10};
  const BasisWindow window{-4, 4};
  const int w = window.dim();
  const ProbeModel model = make_probe_model(cfg, static_hold_probes(cfg, 10), window);

  SUBCASE("default probe set is informationally complete") {
    Vector psi = Vector::Zero(w);
    psi(window.position(-1)) = 1.0;
    const StateEstimate est = mle_state_tomography(exact_dataset(psi * psi.adjoint(), model), model);
    CHECK(est.identifiable);
  }
  SUBCASE("noiseless pure momentum state") {
    Vector psi = Vector::Zero(w);
    psi(window.position(-1)) = 1.0;
    const Matrix truth = psi * psi.adjoint();
    const StateEstimate est = mle_state_tomography(exact_dataset(truth, model), model);
    CHECK(max_abs_diff(est.rho, truth) < 1e-6);
    CHECK(est.purity == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("noiseless superposition with a few probes on a compact window") {
    const BasisWindow small_window{-2, 2};
    const ProbeModel small = make_probe_model(cfg, static_hold_probes(cfg, 4), small_window);
    Vector psi = Vector::Zero(small_window.dim());
    psi(small_window.position(0)) = M_SQRT1_2;
    psi(small_window.position(1)) = imag_unit() * M_SQRT1_2;
    const Matrix truth = psi * psi.adjoint();
    const StateEstimate est = mle_state_tomography(exact_dataset(truth, small), small);
    CHECK(est.identifiable);
    CHECK(state_fidelity(est.rho, truth) >= 1.0 - 1e-6);
  }
  SUBCASE("finite shots recover the state on most seeds") {
    Vector psi = Vector::Zero(w);
    psi(window.position(0)) = M_SQRT1_2;
    psi(window.position(1)) = imag_unit() * M_SQRT1_2;
    const Matrix truth = psi * psi.adjoint();
    int hits = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
      const StateEstimate est =
          mle_state_tomography(sampled_dataset(truth, model, 1000, 100 + s), model);
      if (state_fidelity(est.rho, truth) >= 0.99) ++hits;
    }
    CHECK(hits >= 19);
  }
  SUBCASE("log-likelihood is non-decreasing") {
    Vector psi = Vector::Zero(w);
    psi(window.position(-1)) = 0.6;
    psi(window.position(1)) = std::sqrt(1.0 - 0.36);
    MleOptions opts;
    opts.keep_trace = true;
    const StateEstimate est =
        mle_state_tomography(sampled_dataset(psi * psi.adjoint(), model, 2000, 7), model, opts);
    REQUIRE(est.ll_trace.size() >= 2);
    for (std::size_t i = 1; i < est.ll_trace.size(); ++i)
      CHECK(est.ll_trace[i] >= est.ll_trace[i - 1]);
  }
  SUBCASE("single-probe data is flagged non-identifiable") {
    Vector psi = Vector::Zero(w);
    psi(window.position(0)) = 1.0;
    const ProbeModel one = make_probe_model(cfg, static_hold_probes(cfg, 1), window);
    const StateEstimate est = mle_state_tomography(exact_dataset(psi * psi.adjoint(), one), one);
    CHECK_FALSE(est.identifiable);
    CHECK(est.rho.rows() == w);  // still returns a (regularized) estimate
  }
}

TEST_CASE("run_sqpt") {
  LatticeConfig cfg{5.5, 0.0, 10};
  const SubspaceMap map{{-1, 1}};
  SqptOptions options;
  options.window = BasisWindow{-4, 4};

  SUBCASE("noiseless identity process round trip") {
    const TargetGate target{"I", identity_gate(2), map};
    const SqptReport rep = run_sqpt(std::nullopt, cfg, target, NoiseModel::none(), options);
    CHECK(rep.f_p_ideal_rec == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.f_p_designed_rec == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.alpha_rec == doctest::Approx(1.0).epsilon(1e-6));
    for (const auto& in : rep.inputs) {
      CHECK(in.state_fidelity == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(in.purity_value == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("noiseless leaky channel reconstructs the designed process") {
    // Free evolution for a short time: a leaky channel on the subspace.
    const PhaseRamp free_ramp = PhaseRamp::zero(1, 1.5, 0.05);
    const TargetGate target{"I", identity_gate(2), map};
    const SqptReport rep = run_sqpt(free_ramp, cfg, target, NoiseModel::none(), options);
    CHECK(rep.f_p_designed_rec == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(rep.f_p_ideal_rec - rep.f_p_ideal_designed) < 1e-6);
    CHECK(rep.alpha_rec < 1.0 + 1e-9);
    SUBCASE("alpha matches the mean in-subspace population of the diagonal inputs") {
      // Bookkeeping audit: alpha of the assembled process equals the average
      // subspace population of the reconstructed diagonal-input states.
      double population = 0.0;
      int count = 0;
      const ChoiAssembly& choi = rep.choi;
      for (int u = 0; u < 2; ++u) {
        Complex tr = 0.0;
        for (int r = 0; r < 2; ++r) tr += choi.restricted.block(u, u)(r, r);
        population += tr.real();
        ++count;
      }
      CHECK(alpha_avg(choi.restricted) == doctest::Approx(population / count).epsilon(1e-10));
    }
    SUBCASE("assembled Choi matrices are Hermitian and PSD") {
      CHECK(is_hermitian(rep.choi.extended_beta, 1e-10));
      rep.choi.restricted.validate(1e-10, -1e-8);
      Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rep.choi.extended_beta));
      CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
  }
  SUBCASE("noisy pipeline produces finite error bars and degraded fidelity") {
    NoiseModel noise = NoiseModel::experimental(21);
    options.images_per_probe = 3;
    options.bootstrap_resamples = 40;
    options.mle.max_iters = 400;
    const TargetGate target{"I", identity_gate(2), map};
    const PhaseRamp free_ramp = PhaseRamp::zero(1, 1.5, 0.05);
    const SqptReport rep = run_sqpt(free_ramp, cfg, target, noise, options);
    CHECK(rep.f_p_ideal_rec < 1.0);
    CHECK(rep.f_p_ideal_rec_ci.lo <= rep.f_p_ideal_rec_ci.hi);
    CHECK(rep.bootstrap_resamples == 40);
    for (const auto& in : rep.inputs) {
      CHECK(in.state_fidelity_ci.lo <= in.state_fidelity_ci.hi);
      CHECK(in.purity_value <= 1.0 + 1e-9);
    }
  }
}
