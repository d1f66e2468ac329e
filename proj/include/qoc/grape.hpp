// Fourier-space gradient-ascent synthesis of target unitaries, with
// concurrent averaging over an ensemble of lattice parameters.
//
// Objective: F = |tr(U_T^dag P[U_f])|^2 / d^2 with P[.] the subspace
// restriction of the piecewise propagator (Eq. of the matrix fidelity). The
// gradient is the exact derivative of this discrete objective: with
// U_j = T(phi_j) U0 T(phi_j)^dag, dU_j/dphi_j = i[L, U_j], chained through the
// product by prefix/suffix sweeps, then through dphi_j/da_n = cos(2 pi n f0 t_j)
// and dphi_j/db_n = sin(2 pi n f0 t_j).
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qoc/gates.hpp"
#include "qoc/lattice.hpp"
#include "qoc/propagate.hpp"
#include "qoc/ramp.hpp"
#include "qoc/rng.hpp"
#include "qoc/types.hpp"

namespace qoc {

// |tr(U_T^dag U)|^2 / d^2; 1 iff U equals U_T up to a global phase.
inline double unitary_fidelity(const Matrix& u_proj, const Matrix& u_target) {
  if (u_proj.rows() != u_target.rows() || u_proj.cols() != u_target.cols() ||
      u_proj.rows() != u_proj.cols())
    throw std::invalid_argument("unitary_fidelity: dimension mismatch");
  const double d = static_cast<double>(u_proj.rows());
  const Complex overlap = (u_target.adjoint() * u_proj).trace();
  return std::norm(overlap) / (d * d);
}

struct RobustnessEnsemble {
  std::vector<double> depth_samples;
  std::vector<double> quasimomentum_samples{0.0};

  void validate() const {
    if (depth_samples.empty() || depth_samples.size() > 16)
      throw std::invalid_argument("RobustnessEnsemble: need 1..16 depth samples");
    if (quasimomentum_samples.empty())
      throw std::invalid_argument("RobustnessEnsemble: need at least one q sample");
    if (!std::is_sorted(depth_samples.begin(), depth_samples.end()) ||
        std::adjacent_find(depth_samples.begin(), depth_samples.end()) != depth_samples.end())
      throw std::invalid_argument("RobustnessEnsemble: depth samples must be sorted, distinct");
    if (!std::is_sorted(quasimomentum_samples.begin(), quasimomentum_samples.end()) ||
        std::adjacent_find(quasimomentum_samples.begin(), quasimomentum_samples.end()) !=
            quasimomentum_samples.end())
      throw std::invalid_argument("RobustnessEnsemble: q samples must be sorted, distinct");
  }

  // Sample points in deterministic (s, q) sorted order.
  std::vector<std::pair<double, double>> points() const {
    validate();
    std::vector<std::pair<double, double>> p;
    for (double s : depth_samples)
      for (double q : quasimomentum_samples) p.emplace_back(s, q);
    return p;
  }

  static RobustnessEnsemble centered(double s0, double half_width, int n_depths) {
    RobustnessEnsemble e;
    if (n_depths < 1) throw std::invalid_argument("RobustnessEnsemble: n_depths >= 1");
    if (n_depths == 1) {
      e.depth_samples = {s0};
      return e;
    }
    for (int i = 0; i < n_depths; ++i)
      e.depth_samples.push_back(s0 - half_width + 2.0 * half_width * i / (n_depths - 1));
    return e;
  }
};

struct FourierGradient {
  double value = 0.0;  // fidelity at the expansion point
  double a0 = 0.0;
  RealVector a;
  RealVector b;
};

namespace detail {

// Cosine/sine chain-rule tables, row j ~ step, column n ~ harmonic.
struct HarmonicTable {
  RealMatrix cosines;  // k x n_max
  RealMatrix sines;
};

inline HarmonicTable make_harmonic_table(const PhaseRamp& ramp) {
  const int k = ramp.steps();
  const int nm = ramp.n_max();
  HarmonicTable t;
  t.cosines.resize(k, nm);
  t.sines.resize(k, nm);
  const double w0 = 2.0 * M_PI / ramp.t_f;
  for (int j = 0; j < k; ++j)
    for (int n = 1; n <= nm; ++n) {
      t.cosines(j, n - 1) = std::cos(w0 * n * j * ramp.dt);
      t.sines(j, n - 1) = std::sin(w0 * n * j * ramp.dt);
    }
  return t;
}

inline RealVector phases_from_table(const PhaseRamp& ramp, const HarmonicTable& table) {
  RealVector phi = RealVector::Constant(table.cosines.rows(), ramp.a0);
  if (ramp.n_max() > 0) phi += table.cosines * ramp.a + table.sines * ramp.b;
  return phi;
}

inline std::vector<int> subspace_rows(const SubspaceMap& map, int l_max) {
  std::vector<int> rows(map.d());
  for (int r = 0; r < map.d(); ++r) rows[r] = map.position(map.indices[r], l_max);
  return rows;
}

// Fidelity of one ensemble member for the given sampled phases.
inline double sample_fidelity(const StepBasis& basis, const RealVector& phases,
                              const Matrix& embed, const std::vector<int>& rows,
                              const Matrix& target) {
  const Matrix cols = propagate_columns(basis, phases, embed);
  const int d = static_cast<int>(target.rows());
  Matrix proj(d, d);
  for (int r = 0; r < d; ++r) proj.row(r) = cols.row(rows[r]);
  return unitary_fidelity(proj, target);
}

// Scratch buffers reused across gradient evaluations.
struct GradientWorkspace {
  Matrix gauges;   // n x k, column j = diag of T(phi_j)
  Matrix q_hist;   // n x d*(k+1), slab j = U_{j-1}...U_0 E
  Matrix q_tmp, r_mat, r_next, y, w, inner;
};

// Exact dF/dphi_j for one ensemble member, plus the fidelity.
inline double sample_phase_gradient(const StepBasis& basis, const RealVector& phases,
                                    const SubspaceMap& map, const Matrix& target,
                                    RealVector& grad_phi, GradientWorkspace& ws) {
  const int n = basis.cfg.dim();
  const int d = map.d();
  const int k = static_cast<int>(phases.size());
  const std::vector<int> rows = subspace_rows(map, basis.cfg.l_max);

  ws.gauges.resize(n, k);
  Vector t;
  for (int j = 0; j < k; ++j) {
    fill_gauge_phases(basis.momenta, phases(j), t);
    ws.gauges.col(j) = t;
  }

  // Forward pass: Q_j = U_{j-1}...U_0 E, stored for every j.
  ws.q_hist.resize(n, d * (k + 1));
  ws.q_tmp.resize(n, d);
  auto slab = [&](int j) { return ws.q_hist.middleCols(j * d, d); };
  slab(0).setZero();
  for (int r = 0; r < d; ++r) slab(0)(rows[r], r) = 1.0;
  for (int j = 0; j < k; ++j) {
    ws.q_tmp = slab(j);
    ws.q_tmp.array().colwise() *= ws.gauges.col(j).conjugate().array();
    slab(j + 1).noalias() = basis.u0 * ws.q_tmp;
    slab(j + 1).array().colwise() *= ws.gauges.col(j).array();
  }

  Matrix proj(d, d);
  for (int r = 0; r < d; ++r) proj.row(r) = slab(k).row(rows[r]);
  const Complex overlap = (target.adjoint() * proj).trace();
  const double fidelity = std::norm(overlap) / double(d * d);

  // Backward pass: maintain R = E^dag U_{k-1}...U_{j+1} and accumulate
  // dF/dphi_j = (2/d^2) Re[conj(G) tr(U_T^dag R (T K T^dag) Q_j)].
  grad_phi.resize(k);
  ws.r_mat.resize(d, n);
  ws.r_mat.setZero();
  for (int r = 0; r < d; ++r) ws.r_mat(r, rows[r]) = 1.0;
  const Matrix target_adj = target.adjoint();
  ws.y.resize(d, n);
  ws.w.resize(n, d);
  ws.inner.resize(d, d);
  ws.r_next.resize(d, n);
  for (int j = k - 1; j >= 0; --j) {
    const auto t_j = ws.gauges.col(j);
    ws.y = ws.r_mat;
    ws.y.array().rowwise() *= t_j.transpose().array();
    ws.q_tmp = slab(j);
    ws.q_tmp.array().colwise() *= t_j.conjugate().array();
    ws.w.noalias() = basis.phase_kernel * ws.q_tmp;
    ws.inner.noalias() = ws.y * ws.w;
    const Complex trace_term = (target_adj * ws.inner).trace();
    grad_phi(j) = 2.0 / double(d * d) * std::real(std::conj(overlap) * trace_term);
    // R <- R U_j
    ws.r_next.noalias() = ws.y * basis.u0;
    ws.r_next.array().rowwise() *= t_j.conjugate().transpose().array();
    ws.r_mat.swap(ws.r_next);
  }
  return fidelity;
}

inline double sample_phase_gradient(const StepBasis& basis, const RealVector& phases,
                                    const SubspaceMap& map, const Matrix& target,
                                    RealVector& grad_phi) {
  GradientWorkspace ws;
  return sample_phase_gradient(basis, phases, map, target, grad_phi, ws);
}

}  // namespace detail

// Exact gradient of the matrix fidelity with respect to {a0, a_n, b_n} for a
// single lattice configuration.
inline FourierGradient fidelity_gradient(const PhaseRamp& ramp, const LatticeConfig& cfg,
                                         const TargetGate& target) {
  ramp.validate();
  target.validate();
  target.subspace.validate_against(cfg);
  const StepBasis basis = make_step_basis(cfg, ramp.dt);
  const detail::HarmonicTable table = detail::make_harmonic_table(ramp);
  const RealVector phases = detail::phases_from_table(ramp, table);
  RealVector grad_phi;
  FourierGradient g;
  g.value = detail::sample_phase_gradient(basis, phases, target.subspace, target.matrix, grad_phi);
  g.a0 = grad_phi.sum();
  g.a = table.cosines.transpose() * grad_phi;
  g.b = table.sines.transpose() * grad_phi;
  return g;
}

struct RobustObjective {
  double mean = 0.0;
  std::vector<double> per_sample;  // in ensemble (s, q) sorted order
};

// Mean matrix fidelity over the ensemble, evaluated sample by sample in
// deterministic sorted order.
inline RobustObjective robust_objective(const PhaseRamp& ramp, const RobustnessEnsemble& ensemble,
                                        const TargetGate& target, const LatticeConfig& cfg_template) {
  ramp.validate();
  target.validate();
  RobustObjective out;
  const Matrix embed = embedding_matrix(target.subspace, cfg_template.l_max);
  const std::vector<int> rows = detail::subspace_rows(target.subspace, cfg_template.l_max);
  const RealVector phases = sampled_phases(ramp);
  for (const auto& [s, q] : ensemble.points()) {
    LatticeConfig cfg = cfg_template;
    cfg.depth = s;
    cfg.quasimomentum = q;
    target.subspace.validate_against(cfg);
    const StepBasis basis = make_step_basis(cfg, ramp.dt);
    out.per_sample.push_back(detail::sample_fidelity(basis, phases, embed, rows, target.matrix));
  }
  for (double f : out.per_sample) out.mean += f;
  out.mean /= static_cast<double>(out.per_sample.size());
  return out;
}

struct OptimizerConfig {
  double t_f = 1.0;             // dimensionless
  double dt = 0.1;              // dimensionless
  int n_max = 1;
  double epsilon0 = 1.0;
  double eps_grow = 1.5;
  double eps_shrink = 0.5;
  double eps_floor = 1e-12;
  int max_iters = 3000;
  double fidelity_goal = 0.999;
  std::uint64_t rng_seed = 0;
  int restarts = 1;
  double init_amplitude = 0.1;  // radians, uniform initial coefficients
  std::optional<PhaseRamp> initial_ramp;  // used by the first restart when set

  void validate() const {
    if (!(epsilon0 > 0)) throw std::invalid_argument("OptimizerConfig: epsilon0 must be > 0");
    if (!(fidelity_goal > 0) || fidelity_goal > 1.0)
      throw std::invalid_argument("OptimizerConfig: fidelity_goal must be in (0, 1]");
    if (n_max < 1) throw std::invalid_argument("OptimizerConfig: n_max must be >= 1");
    if (restarts < 1) throw std::invalid_argument("OptimizerConfig: restarts must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 0");
  }
};

struct SampleFidelity {
  double depth;
  double quasimomentum;
  double fidelity;
};

struct OptimizationReport {
  PhaseRamp ramp;
  std::vector<double> fidelity_trace;  // accepted iterations, non-decreasing
  std::vector<SampleFidelity> sample_fidelities;
  double mean_fidelity = 0.0;
  int iterations = 0;
  int restart_index = 0;
  std::string termination;
  std::vector<std::string> warnings;
};

namespace detail {

struct EnsembleContext {
  std::vector<StepBasis> bases;
  std::vector<std::pair<double, double>> points;
  Matrix embed;
  std::vector<int> rows;
  SubspaceMap map;
  Matrix target;
  HarmonicTable table;
  int k = 0;

  double objective(const RealVector& phases) const {
    double acc = 0.0;
    for (const auto& basis : bases) acc += sample_fidelity(basis, phases, embed, rows, target);
    return acc / static_cast<double>(bases.size());
  }

  // Mean fidelity and mean phase-gradient over the ensemble.
  double gradient(const RealVector& phases, RealVector& grad_phi) const {
    grad_phi = RealVector::Zero(k);
    RealVector g;
    double acc = 0.0;
    for (const auto& basis : bases) {
      acc += sample_phase_gradient(basis, phases, map, target, g, workspace);
      grad_phi += g;
    }
    const double inv = 1.0 / static_cast<double>(bases.size());
    grad_phi *= inv;
    return acc * inv;
  }

  mutable GradientWorkspace workspace;
};

}  // namespace detail

// First-order gradient ascent on the Fourier coefficients with backtracking
// step adaptation (halve on non-improvement, grow 1.5x on acceptance). Best
// restart wins; restarts stop early once the goal is met.
inline OptimizationReport grape_optimize(const OptimizerConfig& opt,
                                         const RobustnessEnsemble& ensemble,
                                         const TargetGate& target,
                                         const LatticeConfig& cfg_template) {
  opt.validate();
  ensemble.validate();
  target.validate();

  detail::EnsembleContext ctx;
  ctx.points = ensemble.points();
  for (const auto& [s, q] : ctx.points) {
    LatticeConfig cfg = cfg_template;
    cfg.depth = s;
    cfg.quasimomentum = q;
    target.subspace.validate_against(cfg);
    ctx.bases.push_back(make_step_basis(cfg, opt.dt));
  }
  ctx.embed = embedding_matrix(target.subspace, cfg_template.l_max);
  ctx.rows = detail::subspace_rows(target.subspace, cfg_template.l_max);
  ctx.map = target.subspace;
  ctx.target = target.matrix;

  PhaseRamp proto = PhaseRamp::zero(opt.n_max, opt.t_f, opt.dt);
  ctx.table = detail::make_harmonic_table(proto);
  ctx.k = proto.steps();

  std::vector<std::string> warnings;
  {
    LatticeConfig mid = cfg_template;
    mid.depth = ensemble.depth_samples[ensemble.depth_samples.size() / 2];
    mid.quasimomentum = 0.0;
    const double t0 = band_gap_timescale(mid).dimensionless;
    if (opt.t_f < 3.0 * t0 || opt.t_f > 12.0 * t0)
      warnings.push_back("t_f outside the usual 3..12 band-gap-period window");
  }

  const int n_params = 2 * opt.n_max + 1;
  auto ramp_from = [&](const RealVector& theta) {
    PhaseRamp r = proto;
    r.a0 = theta(0);
    r.a = theta.segment(1, opt.n_max);
    r.b = theta.segment(1 + opt.n_max, opt.n_max);
    return r;
  };

  OptimizationReport best;
  best.mean_fidelity = -1.0;

  for (int restart = 0; restart < opt.restarts; ++restart) {
    RealVector theta(n_params);
    if (restart == 0 && opt.initial_ramp) {
      const PhaseRamp& init = *opt.initial_ramp;
      if (init.n_max() != opt.n_max)
        throw std::invalid_argument("grape_optimize: initial ramp harmonic count mismatch");
      theta(0) = init.a0;
      theta.segment(1, opt.n_max) = init.a;
      theta.segment(1 + opt.n_max, opt.n_max) = init.b;
    } else {
      auto eng = make_engine(derive_seed(opt.rng_seed, static_cast<std::uint64_t>(restart)));
      std::uniform_real_distribution<double> uni(-opt.init_amplitude, opt.init_amplitude);
      for (int i = 0; i < n_params; ++i) theta(i) = uni(eng);
    }

    OptimizationReport rep;
    rep.restart_index = restart;
    rep.warnings = warnings;

    double eps = opt.epsilon0;
    PhaseRamp ramp = ramp_from(theta);
    double f_mean = ctx.objective(detail::phases_from_table(ramp, ctx.table));
    rep.fidelity_trace.push_back(f_mean);
    rep.termination = "max_iters";

    if (f_mean >= opt.fidelity_goal) {
      rep.termination = "fidelity_goal";
    } else {
      for (int iter = 0; iter < opt.max_iters; ++iter) {
        RealVector grad_phi;
        ctx.gradient(detail::phases_from_table(ramp_from(theta), ctx.table), grad_phi);
        RealVector grad_theta(n_params);
        grad_theta(0) = grad_phi.sum();
        grad_theta.segment(1, opt.n_max) = ctx.table.cosines.transpose() * grad_phi;
        grad_theta.segment(1 + opt.n_max, opt.n_max) = ctx.table.sines.transpose() * grad_phi;

        bool accepted = false;
        while (eps >= opt.eps_floor) {
          const RealVector trial = theta + eps * grad_theta;
          const double f_trial =
              ctx.objective(detail::phases_from_table(ramp_from(trial), ctx.table));
          if (f_trial > f_mean) {
            theta = trial;
            f_mean = f_trial;
            eps *= opt.eps_grow;
            accepted = true;
            break;
          }
          eps *= opt.eps_shrink;
        }
        if (!accepted) {
          rep.termination = "epsilon_underflow";
          break;
        }
        rep.fidelity_trace.push_back(f_mean);
        rep.iterations = iter + 1;
        if (f_mean >= opt.fidelity_goal) {
          rep.termination = "fidelity_goal";
          break;
        }
      }
    }

    rep.ramp = ramp_from(theta);
    rep.mean_fidelity = f_mean;
    {
      const RealVector phases = detail::phases_from_table(rep.ramp, ctx.table);
      for (std::size_t i = 0; i < ctx.bases.size(); ++i) {
        const double f =
            detail::sample_fidelity(ctx.bases[i], phases, ctx.embed, ctx.rows, ctx.target);
        rep.sample_fidelities.push_back({ctx.points[i].first, ctx.points[i].second, f});
      }
    }

    if (rep.mean_fidelity > best.mean_fidelity) best = rep;
    if (best.mean_fidelity >= opt.fidelity_goal) break;
  }
  return best;
}

struct SweepPoint {
  double depth;
  double infidelity;
};

// Gate infidelity 1 - F as a function of lattice depth at fixed ramp.
inline std::vector<SweepPoint> infidelity_sweep(const PhaseRamp& ramp, const TargetGate& target,
                                                const LatticeConfig& cfg_template,
                                                const std::vector<double>& depths, double q = 0.0) {
  ramp.validate();
  target.validate();
  const Matrix embed = embedding_matrix(target.subspace, cfg_template.l_max);
  const std::vector<int> rows = detail::subspace_rows(target.subspace, cfg_template.l_max);
  const RealVector phases = sampled_phases(ramp);
  std::vector<SweepPoint> curve;
  curve.reserve(depths.size());
  for (double s : depths) {
    LatticeConfig cfg = cfg_template;
    cfg.depth = s;
    cfg.quasimomentum = q;
    const StepBasis basis = make_step_basis(cfg, ramp.dt);
    curve.push_back({s, 1.0 - detail::sample_fidelity(basis, phases, embed, rows, target.matrix)});
  }
  return curve;
}

}  // namespace qoc
