// Standard quantum process tomography on the lattice qudit.
//
// The d^2 physical input states {|u><u|, |+><+|_uv, |-><-|_uv} are prepared in
// the momentum basis, sent through the gate, probed by static-lattice holds,
// and reconstructed by maximum-likelihood state tomography on an extended
// momentum window H'. The canonical-basis blocks are combined as
//   eps(B_uv) = eps(|+><+|) + i eps(|-><-|) - (1+i)/2 (eps(B_uu) + eps(B_vv))
// and assembled into the Choi matrix.
#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qoc/gates.hpp"
#include "qoc/grape.hpp"
#include "qoc/measurement.hpp"
#include "qoc/process.hpp"
#include "qoc/propagate.hpp"

namespace qoc {

// Contiguous momentum window hosting the reconstructed states; 9 components
// {-4..4} by default.
struct BasisWindow {
  int lo = -4;
  int hi = 4;

  int dim() const { return hi - lo + 1; }
  bool contains(int l) const { return l >= lo && l <= hi; }
  int position(int l) const {
    if (!contains(l)) throw std::out_of_range("BasisWindow: level outside window");
    return l - lo;
  }

  void validate(const LatticeConfig& cfg, const SubspaceMap& map) const {
    if (lo > hi) throw std::invalid_argument("BasisWindow: lo > hi");
    if (lo < -cfg.l_max || hi > cfg.l_max)
      throw std::invalid_argument("BasisWindow: window outside the truncated basis");
    for (int l : map.indices)
      if (!contains(l)) throw std::invalid_argument("BasisWindow: subspace outside window");
  }

  // N x w embedding of the window into the full momentum basis.
  Matrix embedding(int l_max) const {
    Matrix c = Matrix::Zero(2 * l_max + 1, dim());
    for (int l = lo; l <= hi; ++l) c(l + l_max, position(l)) = 1.0;
    return c;
  }
};

enum class InputKind { Diagonal, Plus, Minus };

struct LabeledInput {
  std::string label;
  InputKind kind;
  int u = 0, v = 0;    // subspace level indices, u < v for superpositions
  Vector state;        // embedded in the full momentum basis
};

struct InputStateSet {
  SubspaceMap map;
  std::vector<LabeledInput> states;

  int d() const { return map.d(); }
};

// The d^2 SQPT input states: |u>, (|u>+|v>)/sqrt2, (|u>+i|v>)/sqrt2 (u < v).
inline InputStateSet build_input_states(const SubspaceMap& map, int l_max) {
  map.validate();
  InputStateSet set;
  set.map = map;
  const int d = map.d();
  const int n = 2 * l_max + 1;
  auto basis_vec = [&](int u) {
    Vector e = Vector::Zero(n);
    e(map.position(map.indices[u], l_max)) = 1.0;
    return e;
  };
  for (int u = 0; u < d; ++u) {
    LabeledInput in;
    in.label = "diag(" + std::to_string(map.indices[u]) + ")";
    in.kind = InputKind::Diagonal;
    in.u = in.v = u;
    in.state = basis_vec(u);
    set.states.push_back(std::move(in));
  }
  for (int u = 0; u < d; ++u)
    for (int v = u + 1; v < d; ++v) {
      LabeledInput plus;
      plus.label = "plus(" + std::to_string(map.indices[u]) + "," +
                   std::to_string(map.indices[v]) + ")";
      plus.kind = InputKind::Plus;
      plus.u = u;
      plus.v = v;
      plus.state = (basis_vec(u) + basis_vec(v)) / std::sqrt(2.0);
      set.states.push_back(std::move(plus));
      LabeledInput minus = plus;
      minus.label = "minus(" + std::to_string(map.indices[u]) + "," +
                    std::to_string(map.indices[v]) + ")";
      minus.kind = InputKind::Minus;
      minus.state = (basis_vec(u) + imag_unit() * basis_vec(v)) / std::sqrt(2.0);
      set.states.push_back(std::move(minus));
    }
  return set;
}

struct Probe {
  std::string label;
  double duration = 0.0;  // dimensionless hold time in the static lattice
};

// Static-lattice hold durations. The default is `count` evenly spaced holds
// covering one band-gap period. Evenly spaced holds alias eigenvalue-gap
// frequencies on large windows; golden-ratio spacing over a wider span breaks
// the degeneracy when the tomography needs the full operator space.
inline std::vector<Probe> static_hold_probes(const LatticeConfig& cfg, int count = 10,
                                             double span_periods = 1.0, bool golden = false) {
  if (count < 1) throw std::invalid_argument("static_hold_probes: count >= 1");
  if (!(span_periods > 0)) throw std::invalid_argument("static_hold_probes: span must be > 0");
  const double t0 = band_gap_timescale(cfg).dimensionless;
  std::vector<Probe> probes;
  if (golden) {
    const double ratio = 0.6180339887498949;
    std::vector<double> taus{0.0};
    double frac = 0.0;
    for (int i = 1; i < count; ++i) {
      frac += ratio;
      frac -= std::floor(frac);
      taus.push_back(span_periods * t0 * frac);
    }
    std::sort(taus.begin(), taus.end());
    for (double tau : taus) probes.push_back({"hold:" + std::to_string(tau), tau});
  } else {
    for (int i = 0; i < count; ++i) {
      const double tau = (count == 1) ? 0.0 : span_periods * t0 * i / (count - 1);
      probes.push_back({"hold:" + std::to_string(tau), tau});
    }
  }
  return probes;
}

// Measurement model: per probe the N x w map B_p = U_p C, so expected
// populations are diag(B rho B^dag) over all N diffraction orders.
struct ProbeModel {
  BasisWindow window;
  std::vector<Probe> probes;
  std::vector<Matrix> maps;
};

inline ProbeModel make_probe_model(const LatticeConfig& cfg, const std::vector<Probe>& probes,
                                   const BasisWindow& window) {
  ProbeModel model;
  model.window = window;
  model.probes = probes;
  Eigen::SelfAdjointEigenSolver<Matrix> es(build_hamiltonian(cfg, 0.0));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("make_probe_model: eigensolver failed");
  const Matrix c = window.embedding(cfg.l_max);
  for (const Probe& p : probes) {
    const Vector phases = (-imag_unit() * p.duration * es.eigenvalues().cast<Complex>().array()).exp();
    const Matrix u_hold = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    model.maps.push_back(u_hold * c);
  }
  return model;
}

struct TomographyRecord {
  int probe = 0;
  RealVector populations;  // over the full momentum basis
  long shots = 0;          // 0 = exact populations
};

struct TomographyDataset {
  std::vector<TomographyRecord> records;
};

struct MleOptions {
  int max_iters = 5000;
  double ll_tol = 1e-10;
  bool keep_trace = false;  // keep the likelihood trace for diagnostics
};

struct StateEstimate {
  Matrix rho;
  double purity = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool identifiable = true;
  std::vector<double> ll_trace;
};

inline double purity(const DensityMatrix& rho) { return std::real((rho * rho).trace()); }

namespace detail_tomo {

// Sufficient statistics: per probe, weighted mean frequencies.
struct CollapsedData {
  std::vector<int> probe_index;
  std::vector<RealVector> freq;
  std::vector<double> weight;
};

inline CollapsedData collapse(const TomographyDataset& data) {
  std::map<int, std::pair<RealVector, double>> acc;
  for (const auto& rec : data.records) {
    const double w = rec.shots > 0 ? static_cast<double>(rec.shots) : 1.0;
    auto it = acc.find(rec.probe);
    if (it == acc.end())
      acc.emplace(rec.probe, std::make_pair(RealVector(w * rec.populations), w));
    else {
      it->second.first += w * rec.populations;
      it->second.second += w;
    }
  }
  CollapsedData out;
  for (auto& [probe, fw] : acc) {
    out.probe_index.push_back(probe);
    out.freq.push_back(fw.first / fw.second);
    out.weight.push_back(fw.second);
  }
  return out;
}

inline double log_likelihood(const CollapsedData& data, const ProbeModel& model,
                             const Matrix& rho) {
  double ll = 0.0;
  for (std::size_t r = 0; r < data.freq.size(); ++r) {
    const Matrix& b = model.maps[data.probe_index[r]];
    const RealVector pi = (b * rho * b.adjoint()).diagonal().real();
    for (int l = 0; l < pi.size(); ++l) {
      const double f = data.freq[r](l);
      if (f > 0) ll += data.weight[r] * f * std::log(std::max(pi(l), 1e-300));
    }
  }
  return ll;
}

// R = sum_p w_p B_p^dag diag(f/pi) B_p, the RrhoR ascent kernel.
inline Matrix r_operator(const CollapsedData& data, const ProbeModel& model, const Matrix& rho,
                         double total_weight) {
  const int w = static_cast<int>(rho.rows());
  Matrix r = Matrix::Zero(w, w);
  for (std::size_t rec = 0; rec < data.freq.size(); ++rec) {
    const Matrix& b = model.maps[data.probe_index[rec]];
    const RealVector pi = (b * rho * b.adjoint()).diagonal().real();
    RealVector coeff(pi.size());
    for (int l = 0; l < pi.size(); ++l) {
      const double f = data.freq[rec](l);
      coeff(l) = (f > 0) ? data.weight[rec] * f / std::max(pi(l), 1e-14) : 0.0;
    }
    r.noalias() += b.adjoint() * coeff.asDiagonal() * b;
  }
  return r / total_weight;
}

inline Matrix project_psd_unit_trace(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector lam = es.eigenvalues().cwiseMax(0.0);
  const double tr = lam.sum();
  if (tr <= 0) return Matrix::Identity(m.rows(), m.cols()) / static_cast<double>(m.rows());
  lam /= tr;
  return es.eigenvectors() * lam.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

// Deterministic linear-inversion seed: least squares over the real Hermitian
// parametrization, followed by a PSD projection. Also decides identifiability
// (rank of the measurement design).
inline Matrix linear_inversion_seed(const CollapsedData& data, const ProbeModel& model,
                                    bool& identifiable) {
  const int w = model.window.dim();
  const int n_params = w * w;
  long n_rows = 0;
  for (std::size_t r = 0; r < data.freq.size(); ++r) n_rows += data.freq[r].size();
  RealMatrix a(n_rows, n_params);
  RealVector y(n_rows);
  long row = 0;
  for (std::size_t r = 0; r < data.freq.size(); ++r) {
    const Matrix& b = model.maps[data.probe_index[r]];
    for (int l = 0; l < data.freq[r].size(); ++l) {
      // pi = <l| B rho B^dag |l> = sum_ab M_ab rho_ba with M = B^dag|l><l|B.
      const Vector brow = b.row(l).adjoint();  // w-vector, M = brow brow^dag
      int col = 0;
      for (int i = 0; i < w; ++i) a(row, col++) = std::norm(brow(i));
      for (int i = 0; i < w; ++i)
        for (int j = i + 1; j < w; ++j) {
          const Complex m_ij = brow(i) * std::conj(brow(j));
          a(row, col++) = 2.0 * m_ij.real();
          a(row, col++) = 2.0 * m_ij.imag();
        }
      y(row) = data.freq[r](l);
      ++row;
    }
  }
  Eigen::ColPivHouseholderQR<RealMatrix> qr(a);
  // Structural rank gaps sit at the roundoff floor; genuinely weak probe
  // directions still count as identifiable.
  qr.setThreshold(1e-12);
  identifiable = (qr.rank() == n_params);
  const RealVector x = qr.solve(y);
  Matrix rho(w, w);
  int col = 0;
  for (int i = 0; i < w; ++i) rho(i, i) = x(col++);
  for (int i = 0; i < w; ++i)
    for (int j = i + 1; j < w; ++j) {
      const double re = x(col++);
      const double im = x(col++);
      rho(i, j) = Complex(re, im);
      rho(j, i) = Complex(re, -im);
    }
  return rho;
}

}  // namespace detail_tomo

// Maximum-likelihood state tomography: linear-inversion seed, then monotone
// RrhoR fixed-point iterations (diluted fallback keeps the likelihood
// non-decreasing). Deterministic given data and options.
inline StateEstimate mle_state_tomography(const TomographyDataset& data, const ProbeModel& model,
                                          const MleOptions& options = {}) {
  using namespace detail_tomo;
  if (data.records.empty()) throw std::invalid_argument("mle_state_tomography: empty dataset");
  const CollapsedData collapsed = collapse(data);
  for (int p : collapsed.probe_index)
    if (p < 0 || p >= static_cast<int>(model.maps.size()))
      throw std::out_of_range("mle_state_tomography: record references unknown probe");
  double total_weight = 0.0;
  for (double w : collapsed.weight) total_weight += w;

  StateEstimate est;
  // The least-squares seed is minimal-norm, so unprobed directions stay at
  // zero: the maximum-entropy-flavored choice among likelihood-equivalent
  // states. A rank-deficient design only raises the flag.
  Matrix rho = linear_inversion_seed(collapsed, model, est.identifiable);
  rho = project_psd_unit_trace(rho);

  double ll = log_likelihood(collapsed, model, rho);
  if (options.keep_trace) est.ll_trace.push_back(ll);
  const int w = model.window.dim();
  const Matrix eye = Matrix::Identity(w, w);
  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    const Matrix r = r_operator(collapsed, model, rho, total_weight);
    Matrix candidate = r * rho * r;
    candidate = hermitize(candidate / candidate.trace().real());
    double ll_new = log_likelihood(collapsed, model, candidate);
    if (ll_new < ll) {
      // Diluted step (I + lam R) rho (I + lam R): an ascent direction as
      // lam -> 0, so backtracking terminates.
      double lam = 1.0;
      bool ok = false;
      for (int back = 0; back < 60; ++back) {
        const Matrix m = eye + lam * r;
        Matrix damped = m * rho * m;
        damped = hermitize(damped / damped.trace().real());
        const double ll_damped = log_likelihood(collapsed, model, damped);
        if (ll_damped >= ll) {
          candidate = damped;
          ll_new = ll_damped;
          ok = true;
          break;
        }
        lam *= 0.5;
      }
      if (!ok) break;  // numerically at the optimum
    }
    const double gain = ll_new - ll;
    if (gain < options.ll_tol) break;  // converged; don't take a negligible step
    rho = candidate;
    ll = ll_new;
    if (options.keep_trace) est.ll_trace.push_back(ll);
  }
  est.rho = rho;
  est.purity = purity(rho);
  est.log_likelihood = ll;
  est.iterations = iter;
  return est;
}

// Uhlmann fidelity tr(sqrt(sqrt(rho_T) rho sqrt(rho_T)))^2.
inline double state_fidelity(const DensityMatrix& rho, const DensityMatrix& rho_target) {
  if (rho.rows() != rho_target.rows() || rho.cols() != rho_target.cols())
    throw std::invalid_argument("state_fidelity: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho_target));
  const RealVector lam = es.eigenvalues().cwiseMax(0.0);
  const Matrix sqrt_t =
      es.eigenvectors() * lam.cwiseSqrt().cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> em(hermitize(sqrt_t * rho * sqrt_t));
  const double root_sum = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return root_sum * root_sum;
}

// Combination identity producing eps(B_uv) from the four physical inputs.
// (The +i / (1+i)/2 signs go with |-> = (|u> + i|v>)/sqrt2; they are fixed by
// requiring eps = id to return B_uv, and validated against U B_uv U^dag.)
inline Matrix reconstruct_eps_buv(const Matrix& eps_plus, const Matrix& eps_minus,
                                  const Matrix& eps_uu, const Matrix& eps_vv) {
  return eps_plus + imag_unit() * eps_minus -
         (Complex(1.0, 1.0) / 2.0) * (eps_uu + eps_vv);
}

struct ChoiAssembly {
  ProcessMatrix restricted;   // d^2 x d^2, outputs restricted to the subspace
  Matrix extended_beta;       // (d w) x (d w), outputs kept on the window
  BasisWindow window;
  SubspaceMap map;
};

// Assemble the Choi matrix from the d^2 reconstructed blocks eps(B_uv), given
// on the window basis and indexed u*d + v. The extended Choi gets a final PSD
// projection (eigenvalue floor at zero); the restriction to the subspace is a
// congruence, so the restricted Choi inherits positivity.
inline ChoiAssembly assemble_choi(const std::vector<Matrix>& eps_blocks, const SubspaceMap& map,
                                  const BasisWindow& window) {
  const int d = map.d();
  const int w = window.dim();
  if (static_cast<int>(eps_blocks.size()) != d * d)
    throw std::invalid_argument("assemble_choi: need d^2 blocks");
  ChoiAssembly out;
  out.window = window;
  out.map = map;
  out.extended_beta = Matrix::Zero(d * w, d * w);
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v) {
      const Matrix& block = eps_blocks[u * d + v];
      if (block.rows() != w || block.cols() != w)
        throw std::invalid_argument("assemble_choi: block dimension mismatch");
      out.extended_beta.block(u * w, v * w, w, w) = block;
    }
  out.extended_beta = psd_projected(out.extended_beta);
  out.restricted.d = d;
  out.restricted.beta = Matrix::Zero(d * d, d * d);
  std::vector<int> pos(d);
  for (int i = 0; i < d; ++i) pos[i] = window.position(map.indices[i]);
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          out.restricted.block(u, v)(r, c) =
              out.extended_beta(u * w + pos[r], v * w + pos[c]);
  return out;
}

struct SqptOptions {
  BasisWindow window;
  int hold_probes = 10;
  double hold_span_periods = 1.0;
  bool golden_holds = false;
  int images_per_probe = 1;
  int bootstrap_resamples = 0;
  MleOptions mle;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SqptInputReport {
  std::string label;
  double state_fidelity = 0.0;  // vs the ideally transformed input
  double purity_value = 0.0;
  ConfidenceInterval state_fidelity_ci;
  ConfidenceInterval purity_ci;
};

struct SqptReport {
  ChoiAssembly choi;
  std::vector<SqptInputReport> inputs;
  double f_p_ideal_designed = 0.0;  // F_p(th, oc)
  double f_p_ideal_rec = 0.0;       // F_p(th, rec)
  double f_p_designed_rec = 0.0;    // F_p(oc, rec)
  double alpha_rec = 0.0;
  double alpha_designed = 0.0;
  double f_avg_ideal_designed = 0.0;
  double f_avg_ideal_rec = 0.0;
  ConfidenceInterval f_p_ideal_rec_ci;
  ConfidenceInterval f_avg_ideal_rec_ci;
  int bootstrap_resamples = 0;
};

namespace detail_tomo {

// One experimental run: draw lattice parameters, apply the gate ramp (if
// any), hold in the static lattice, return the final state.
inline Vector run_gate_and_hold(const std::optional<PhaseRamp>& ramp, const LatticeConfig& cfg,
                                const NoiseModel& noise, double hold_duration, const Vector& psi,
                                std::mt19937_64& eng) {
  LatticeConfig run_cfg = cfg;
  run_cfg.depth += noise.depth_offset;
  if (noise.depth_jitter_sigma > 0) {
    std::normal_distribution<double> jitter(0.0, noise.depth_jitter_sigma);
    run_cfg.depth += jitter(eng);
  }
  if (noise.quasimomentum_sigma > 0) {
    std::normal_distribution<double> spread(0.0, noise.quasimomentum_sigma);
    run_cfg.quasimomentum = std::clamp(cfg.quasimomentum + spread(eng), -0.5, 0.5);
  }
  run_cfg.depth = std::max(run_cfg.depth, 1e-9);

  Vector state = psi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(build_hamiltonian(run_cfg, 0.0));
  if (ramp) {
    const StepBasis basis = make_step_basis(run_cfg, ramp->dt);
    state = propagate_columns(basis, sampled_phases(*ramp), state);
  }
  if (hold_duration > 0) {
    const Vector phases =
        (-imag_unit() * hold_duration * es.eigenvalues().cast<Complex>().array()).exp();
    state = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * state));
  }
  return state;
}

inline TomographyDataset simulate_dataset(const std::optional<PhaseRamp>& ramp,
                                          const LatticeConfig& cfg, const NoiseModel& noise,
                                          const std::vector<Probe>& probes, const Vector& psi,
                                          int images_per_probe, std::uint64_t stream) {
  TomographyDataset data;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const int images = noise.deterministic() ? 1 : images_per_probe;
    for (int img = 0; img < images; ++img) {
      const std::uint64_t run =
          stream * 1000003ULL + p * 1009ULL + static_cast<std::uint64_t>(img);
      auto eng = make_engine(derive_seed(noise.seed, run));
      const Vector out = run_gate_and_hold(ramp, cfg, noise, probes[p].duration, psi, eng);
      TomographyRecord rec;
      rec.probe = static_cast<int>(p);
      rec.populations = measure_populations(out, noise, eng);
      rec.shots = noise.atom_number;
      data.records.push_back(std::move(rec));
    }
  }
  return data;
}

inline TomographyDataset resample_dataset(const TomographyDataset& data, std::mt19937_64& eng) {
  TomographyDataset out;
  for (const auto& rec : data.records) {
    TomographyRecord r = rec;
    if (rec.shots > 0) {
      const std::vector<long> counts = multinomial_sample(rec.populations, rec.shots, eng);
      for (int i = 0; i < r.populations.size(); ++i)
        r.populations(i) = static_cast<double>(counts[i]) / static_cast<double>(rec.shots);
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline ConfidenceInterval percentile_ci(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double idx = q * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = idx - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return {at(0.025), at(0.975)};
}

}  // namespace detail_tomo

// End-to-end simulated SQPT of a gate ramp (or of the identity when no ramp
// is given): prepare the d^2 inputs, evolve, measure, reconstruct by MLE,
// combine and assemble the Choi matrix, and compare against the ideal target
// and the designed (optimal-control) process.
inline SqptReport run_sqpt(const std::optional<PhaseRamp>& ramp, const LatticeConfig& cfg,
                           const TargetGate& target, const NoiseModel& noise,
                           const SqptOptions& options) {
  cfg.validate();
  target.validate();
  noise.validate();
  const SubspaceMap& map = target.subspace;
  map.validate_against(cfg);
  options.window.validate(cfg, map);

  const InputStateSet inputs = build_input_states(map, cfg.l_max);
  const std::vector<Probe> probes = static_hold_probes(
      cfg, options.hold_probes, options.hold_span_periods, options.golden_holds);
  const ProbeModel model = make_probe_model(cfg, probes, options.window);
  const int d = map.d();
  const int w = options.window.dim();

  // Designed process: the noise-free propagator of the ramp at the nominal
  // configuration, as a channel on the window.
  const Matrix u_designed = ramp ? evolve(*ramp, cfg) : Matrix::Identity(cfg.dim(), cfg.dim());
  const Matrix c_embed = options.window.embedding(cfg.l_max);
  const KrausProcess designed_window{{c_embed.adjoint() * u_designed * c_embed}};
  std::vector<int> subspace_pos_window(d);
  for (int i = 0; i < d; ++i) subspace_pos_window[i] = options.window.position(map.indices[i]);
  const ProcessMatrix choi_designed = subspace_choi(designed_window, subspace_pos_window);
  const ProcessMatrix choi_ideal = choi_of_unitary(target.matrix);

  // Simulate datasets and reconstruct every input state.
  std::vector<TomographyDataset> datasets;
  std::vector<StateEstimate> estimates;
  SqptReport report;
  for (std::size_t i = 0; i < inputs.states.size(); ++i) {
    datasets.push_back(detail_tomo::simulate_dataset(ramp, cfg, noise, probes,
                                                     inputs.states[i].state,
                                                     options.images_per_probe, i + 1));
    estimates.push_back(mle_state_tomography(datasets.back(), model, options.mle));
  }

  // Per-input report versus the ideally transformed inputs.
  const Matrix embed_sub = embedding_matrix(map, cfg.l_max);
  for (std::size_t i = 0; i < inputs.states.size(); ++i) {
    const LabeledInput& in = inputs.states[i];
    SqptInputReport row;
    row.label = in.label;
    const Vector sub_in = embed_sub.adjoint() * in.state;
    const Vector ideal_sub = target.matrix * sub_in;
    Vector ideal_window = Vector::Zero(w);
    for (int r = 0; r < d; ++r) ideal_window(subspace_pos_window[r]) = ideal_sub(r);
    row.state_fidelity = state_fidelity(estimates[i].rho, ideal_window * ideal_window.adjoint());
    row.purity_value = estimates[i].purity;
    report.inputs.push_back(row);
  }

  auto assemble_from = [&](const std::vector<Matrix>& rhos) {
    // Index the estimates: diagonal states first, then (plus, minus) pairs in
    // build_input_states order.
    std::vector<const Matrix*> diag(d);
    std::map<std::pair<int, int>, std::pair<const Matrix*, const Matrix*>> pairs;
    int idx = 0;
    for (const auto& in : inputs.states) {
      if (in.kind == InputKind::Diagonal) diag[in.u] = &rhos[idx];
      ++idx;
    }
    idx = 0;
    for (const auto& in : inputs.states) {
      if (in.kind == InputKind::Plus) pairs[{in.u, in.v}].first = &rhos[idx];
      if (in.kind == InputKind::Minus) pairs[{in.u, in.v}].second = &rhos[idx];
      ++idx;
    }
    std::vector<Matrix> blocks(d * d);
    for (int u = 0; u < d; ++u) blocks[u * d + u] = *diag[u];
    for (int u = 0; u < d; ++u)
      for (int v = u + 1; v < d; ++v) {
        const auto& [plus, minus] = pairs[{u, v}];
        blocks[u * d + v] = reconstruct_eps_buv(*plus, *minus, *diag[u], *diag[v]);
        blocks[v * d + u] = blocks[u * d + v].adjoint();
      }
    return assemble_choi(blocks, map, options.window);
  };

  std::vector<Matrix> rhos;
  for (const auto& est : estimates) rhos.push_back(est.rho);
  report.choi = assemble_from(rhos);

  report.f_p_ideal_designed = process_fidelity(choi_ideal, choi_designed);
  report.f_p_ideal_rec = process_fidelity(choi_ideal, report.choi.restricted);
  report.f_p_designed_rec = process_fidelity(choi_designed, report.choi.restricted);
  report.alpha_rec = alpha_avg(report.choi.restricted);
  report.alpha_designed = alpha_avg(choi_designed);
  report.f_avg_ideal_designed =
      avg_gate_fidelity_formula(report.f_p_ideal_designed, report.alpha_designed, d);
  report.f_avg_ideal_rec = avg_gate_fidelity_formula(report.f_p_ideal_rec, report.alpha_rec, d);

  // Percentile bootstrap over resampled measurement records.
  if (options.bootstrap_resamples > 0 && !noise.deterministic()) {
    report.bootstrap_resamples = options.bootstrap_resamples;
    std::vector<double> fp_samples, favg_samples;
    std::vector<std::vector<double>> fs_samples(inputs.states.size()),
        p_samples(inputs.states.size());
    for (int bsam = 0; bsam < options.bootstrap_resamples; ++bsam) {
      auto eng = make_engine(derive_seed(noise.seed, 0xB007000ULL + bsam));
      std::vector<Matrix> boot_rhos;
      for (std::size_t i = 0; i < inputs.states.size(); ++i) {
        const TomographyDataset resampled = detail_tomo::resample_dataset(datasets[i], eng);
        const StateEstimate est = mle_state_tomography(resampled, model, options.mle);
        boot_rhos.push_back(est.rho);
        const LabeledInput& in = inputs.states[i];
        const Vector sub_in = embed_sub.adjoint() * in.state;
        const Vector ideal_sub = target.matrix * sub_in;
        Vector ideal_window = Vector::Zero(w);
        for (int r = 0; r < d; ++r) ideal_window(subspace_pos_window[r]) = ideal_sub(r);
        fs_samples[i].push_back(state_fidelity(est.rho, ideal_window * ideal_window.adjoint()));
        p_samples[i].push_back(purity(est.rho));
      }
      const ChoiAssembly boot_choi = assemble_from(boot_rhos);
      const double fp = process_fidelity(choi_ideal, boot_choi.restricted);
      fp_samples.push_back(fp);
      favg_samples.push_back(
          avg_gate_fidelity_formula(fp, alpha_avg(boot_choi.restricted), d));
    }
    report.f_p_ideal_rec_ci = detail_tomo::percentile_ci(fp_samples);
    report.f_avg_ideal_rec_ci = detail_tomo::percentile_ci(favg_samples);
    for (std::size_t i = 0; i < inputs.states.size(); ++i) {
      report.inputs[i].state_fidelity_ci = detail_tomo::percentile_ci(fs_samples[i]);
      report.inputs[i].purity_ci = detail_tomo::percentile_ci(p_samples[i]);
    }
  }
  return report;
}

}  // namespace qoc
