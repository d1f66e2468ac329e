// Interference-based retrieval of relative phases between momentum
// components, using the H and W gates for a two-mode superposition and the
// (modified) discrete Fourier transform for the general d-mode scheme.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "qoc/gates.hpp"
#include "qoc/measurement.hpp"
#include "qoc/rng.hpp"
#include "qoc/types.hpp"

namespace qoc {

// |psi> = a |-j> + b e^{i theta} |j> on H_j = {|-j>, |j>}, a^2 + b^2 = 1.
struct TwoModeState {
  int j = 1;  // 1 for {|-1>,|1>}, 2 for {|-2>,|2>}
  double a = M_SQRT1_2;
  double b = M_SQRT1_2;
  double theta = 0.0;

  void validate() const {
    if (j < 1) throw std::invalid_argument("TwoModeState: j must be >= 1");
    if (a < 0 || b < 0) throw std::invalid_argument("TwoModeState: amplitudes must be >= 0");
    if (std::abs(a * a + b * b - 1.0) > 1e-12)
      throw std::invalid_argument("TwoModeState: state must be normalized");
  }

  Vector amplitudes() const {
    Vector v(2);
    v(0) = a;
    v(1) = b * std::exp(imag_unit() * theta);
    return v;
  }
};

struct TwoModePrediction {
  double h_minus, h_plus;  // populations of |-j>, |j> after H
  double w_minus, w_plus;  // populations after W
};

// Closed-form populations (1 +- 2ab cos theta)/2 and (1 +- 2ab sin theta)/2.
inline TwoModePrediction two_mode_predict(const TwoModeState& s) {
  s.validate();
  const double cross = 2.0 * s.a * s.b;
  TwoModePrediction p;
  p.h_minus = 0.5 * (1.0 + cross * std::cos(s.theta));
  p.h_plus = 0.5 * (1.0 - cross * std::cos(s.theta));
  p.w_minus = 0.5 * (1.0 + cross * std::sin(s.theta));
  p.w_plus = 0.5 * (1.0 - cross * std::sin(s.theta));
  return p;
}

struct PhaseSolveResult {
  double theta_hat = 0.0;    // in (-pi, pi]
  double residual = 0.0;     // squared residual of the four population equations
  double ci_lo = 0.0;        // 95% bootstrap confidence interval around theta_hat
  double ci_hi = 0.0;
  bool identifiable = true;  // false when a*b is too small for interference
  double a = 0.0, b = 0.0;   // amplitudes estimated from the bare populations
};

inline double wrap_angle(double x) {
  x = std::fmod(x + M_PI, 2.0 * M_PI);
  if (x < 0) x += 2.0 * M_PI;
  return x - M_PI;
}

namespace detail_phase {

struct TwoModeMeasurement {
  double bare_minus, bare_plus;
  double h_minus, h_plus;
  double w_minus, w_plus;
};

inline PhaseSolveResult solve_point(const TwoModeMeasurement& m, double ab_threshold) {
  PhaseSolveResult r;
  const double total = m.bare_minus + m.bare_plus;
  if (total <= 0) {
    r.identifiable = false;
    return r;
  }
  r.a = std::sqrt(std::max(0.0, m.bare_minus / total));
  r.b = std::sqrt(std::max(0.0, m.bare_plus / total));
  const double ab = r.a * r.b;
  if (ab < ab_threshold) {
    r.identifiable = false;
    return r;
  }
  // Least squares over the four equations reduces to the quadrature pair
  // x = ab cos theta, y = ab sin theta.
  const double x = 0.5 * (m.h_minus - m.h_plus);
  const double y = 0.5 * (m.w_minus - m.w_plus);
  r.theta_hat = std::atan2(y, x);
  const TwoModePrediction fit = two_mode_predict({1, r.a, r.b, r.theta_hat});
  r.residual = (fit.h_minus - m.h_minus) * (fit.h_minus - m.h_minus) +
               (fit.h_plus - m.h_plus) * (fit.h_plus - m.h_plus) +
               (fit.w_minus - m.w_minus) * (fit.w_minus - m.w_minus) +
               (fit.w_plus - m.w_plus) * (fit.w_plus - m.w_plus);
  return r;
}

}  // namespace detail_phase

// Least-squares phase estimate from the three measured population records
// (bare, after H, after W), each over the two modes (-j, +j). Confidence
// interval by percentile bootstrap with multinomial shot resampling.
inline PhaseSolveResult solve_two_mode(const RealVector& meas_bare, const RealVector& meas_h,
                                       const RealVector& meas_w, long atom_number = 0,
                                       std::uint64_t seed = 0, int bootstrap_resamples = 200,
                                       double ab_threshold = 1e-3) {
  if (meas_bare.size() != 2 || meas_h.size() != 2 || meas_w.size() != 2)
    throw std::invalid_argument("solve_two_mode: expected two-mode population vectors");
  detail_phase::TwoModeMeasurement m{meas_bare(0), meas_bare(1), meas_h(0),
                                     meas_h(1),    meas_w(0),   meas_w(1)};
  PhaseSolveResult r = detail_phase::solve_point(m, ab_threshold);
  r.ci_lo = r.ci_hi = r.theta_hat;
  if (!r.identifiable || atom_number <= 0 || bootstrap_resamples <= 0) return r;

  std::vector<double> deviations;
  deviations.reserve(bootstrap_resamples);
  auto resample_pair = [&](double p0, double p1, std::mt19937_64& eng) {
    RealVector probs(2);
    const double tot = std::max(p0 + p1, 1e-12);
    probs << p0 / tot, p1 / tot;
    const std::vector<long> counts = multinomial_sample(probs, atom_number, eng);
    return std::pair<double, double>(static_cast<double>(counts[0]) / atom_number,
                                     static_cast<double>(counts[1]) / atom_number);
  };
  for (int bsam = 0; bsam < bootstrap_resamples; ++bsam) {
    auto eng = make_engine(derive_seed(seed, 0xCB00 + bsam));
    detail_phase::TwoModeMeasurement mb;
    std::tie(mb.bare_minus, mb.bare_plus) = resample_pair(m.bare_minus, m.bare_plus, eng);
    std::tie(mb.h_minus, mb.h_plus) = resample_pair(m.h_minus, m.h_plus, eng);
    std::tie(mb.w_minus, mb.w_plus) = resample_pair(m.w_minus, m.w_plus, eng);
    const PhaseSolveResult rb = detail_phase::solve_point(mb, ab_threshold / 10.0);
    if (rb.identifiable) deviations.push_back(wrap_angle(rb.theta_hat - r.theta_hat));
  }
  if (!deviations.empty()) {
    std::sort(deviations.begin(), deviations.end());
    const auto at = [&](double q) {
      const double idx = q * (deviations.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(idx);
      const std::size_t hi = std::min(lo + 1, deviations.size() - 1);
      return deviations[lo] * (1.0 - (idx - lo)) + deviations[hi] * (idx - lo);
    };
    r.ci_lo = r.theta_hat + at(0.025);
    r.ci_hi = r.theta_hat + at(0.975);
  }
  return r;
}

struct GeneralPhaseSolution {
  RealVector phases;  // d-1 relative phases, first component gauged to 0
  double residual = 0.0;
};

struct GeneralPhaseResult {
  std::vector<GeneralPhaseSolution> solutions;  // all optima within 1% of best
  GeneralPhaseSolution best;
  std::vector<bool> amplitude_ok;  // per-component identifiability
};

namespace detail_phase {

// Residuals of the 2d population equations for phase vector theta (component
// 0 fixed to zero).
inline void general_residuals(const RealVector& amps, const RealVector& theta,
                              const Matrix& f_gate, const Matrix& fmod_gate,
                              const RealVector& meas_f, const RealVector& meas_fmod,
                              RealVector& res, RealMatrix* jac) {
  const int d = static_cast<int>(amps.size());
  Vector psi(d);
  psi(0) = amps(0);
  for (int m = 1; m < d; ++m) psi(m) = amps(m) * std::exp(imag_unit() * theta(m - 1));
  const Vector af = f_gate * psi;
  const Vector am = fmod_gate * psi;
  res.resize(2 * d);
  for (int k = 0; k < d; ++k) {
    res(k) = std::norm(af(k)) - meas_f(k);
    res(d + k) = std::norm(am(k)) - meas_fmod(k);
  }
  if (jac) {
    jac->resize(2 * d, d - 1);
    for (int m = 1; m < d; ++m) {
      const Complex dpsi = imag_unit() * psi(m);
      for (int k = 0; k < d; ++k) {
        (*jac)(k, m - 1) = 2.0 * std::real(std::conj(af(k)) * f_gate(k, m) * dpsi);
        (*jac)(d + k, m - 1) = 2.0 * std::real(std::conj(am(k)) * fmod_gate(k, m) * dpsi);
      }
    }
  }
}

}  // namespace detail_phase

// General d-mode phase retrieval: nonlinear least squares over the d-1
// relative phases of a pure state, best of `restarts` random initial
// conditions (Levenberg-Marquardt refinement).
inline GeneralPhaseResult general_phase_retrieval(const RealVector& meas_bare,
                                                  const RealVector& meas_f,
                                                  const RealVector& meas_fmod, int restarts = 200,
                                                  std::uint64_t seed = 0,
                                                  double amp_threshold = 1e-6) {
  const int d = static_cast<int>(meas_bare.size());
  if (d < 2 || meas_f.size() != d || meas_fmod.size() != d)
    throw std::invalid_argument("general_phase_retrieval: population vectors must share dim >= 2");
  if (restarts < 1) throw std::invalid_argument("general_phase_retrieval: restarts >= 1");

  const double total = meas_bare.sum();
  if (total <= 0) throw std::invalid_argument("general_phase_retrieval: empty bare populations");
  RealVector amps = (meas_bare / total).cwiseMax(0.0).cwiseSqrt();

  GeneralPhaseResult result;
  for (int m = 0; m < d; ++m) result.amplitude_ok.push_back(amps(m) > amp_threshold);

  const Matrix f_gate = dft_gate(d);
  const Matrix fmod_gate = modified_dft_gate(d);

  const int n_theta = d - 1;
  RealVector res;
  RealMatrix jac;
  std::vector<GeneralPhaseSolution> converged;
  for (int rs = 0; rs < restarts; ++rs) {
    auto eng = make_engine(derive_seed(seed, rs));
    std::uniform_real_distribution<double> uni(-M_PI, M_PI);
    RealVector theta(n_theta);
    for (int i = 0; i < n_theta; ++i) theta(i) = uni(eng);

    double lambda = 1e-3;
    detail_phase::general_residuals(amps, theta, f_gate, fmod_gate, meas_f, meas_fmod, res, &jac);
    double cost = res.squaredNorm();
    for (int iter = 0; iter < 100; ++iter) {
      const RealMatrix jtj = jac.transpose() * jac;
      const RealVector jtr = jac.transpose() * res;
      const RealMatrix lhs = jtj + lambda * RealMatrix::Identity(n_theta, n_theta);
      const RealVector delta = lhs.ldlt().solve(-jtr);
      RealVector trial = theta + delta;
      RealVector res_trial;
      detail_phase::general_residuals(amps, trial, f_gate, fmod_gate, meas_f, meas_fmod,
                                      res_trial, nullptr);
      const double cost_trial = res_trial.squaredNorm();
      if (cost_trial < cost) {
        theta = trial;
        cost = cost_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        detail_phase::general_residuals(amps, theta, f_gate, fmod_gate, meas_f, meas_fmod, res,
                                        &jac);
        if (delta.cwiseAbs().maxCoeff() < 1e-13) break;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) break;
      }
    }
    GeneralPhaseSolution sol;
    sol.phases.resize(n_theta);
    for (int i = 0; i < n_theta; ++i) sol.phases(i) = wrap_angle(theta(i));
    sol.residual = cost;
    converged.push_back(std::move(sol));
  }

  std::sort(converged.begin(), converged.end(),
            [](const auto& a, const auto& b) { return a.residual < b.residual; });
  result.best = converged.front();
  const double cutoff = result.best.residual + 0.01 * std::max(result.best.residual, 1e-12);
  for (const auto& sol : converged) {
    if (sol.residual > cutoff) break;
    const bool duplicate =
        std::any_of(result.solutions.begin(), result.solutions.end(), [&](const auto& seen) {
          for (int i = 0; i < sol.phases.size(); ++i)
            if (std::abs(wrap_angle(sol.phases(i) - seen.phases(i))) > 1e-3) return false;
          return true;
        });
    if (!duplicate) result.solutions.push_back(sol);
  }
  return result;
}

}  // namespace qoc
