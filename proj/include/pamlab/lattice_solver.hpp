#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pamlab/errors.hpp"
#include "pamlab/heat_semigroup.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/spectral_kernels.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/torus.hpp"

namespace pamlab {

// b(u): lambda*u, lambda*sin(u) or lambda*clamp(u, -M, M).
class DiffusionCoefficient {
 public:
  enum class Kind { PAM, Sine, Saturating };

  static DiffusionCoefficient pam(double lambda) { return {Kind::PAM, lambda, 0}; }
  static DiffusionCoefficient sine(double lambda) { return {Kind::Sine, lambda, 0}; }
  static DiffusionCoefficient saturating(double lambda, double M) {
    if (!(M > 0)) fail(Errc::InvalidArgument, "saturation level must be positive");
    return {Kind::Saturating, lambda, M};
  }

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double level() const { return M_; }
  std::string name() const {
    switch (kind_) {
      case Kind::PAM: return "pam";
      case Kind::Sine: return "sine";
      default: return "saturating";
    }
  }

  double operator()(double u) const {
    switch (kind_) {
      case Kind::PAM: return lambda_ * u;
      case Kind::Sine: return lambda_ * std::sin(u);
      default: return lambda_ * std::clamp(u, -M_, M_);
    }
  }
  double lipschitz() const { return std::abs(lambda_); }
  double cone() const { return kind_ == Kind::PAM ? std::abs(lambda_) : 0.0; }

 private:
  DiffusionCoefficient(Kind k, double l, double M) : kind_(k), lambda_(l), M_(M) {
    if (!std::isfinite(l)) fail(Errc::InvalidArgument, "coefficient strength must be finite");
  }
  Kind kind_;
  double lambda_;
  double M_;
};

// Largest observed |b(u)-b(v)| / |u-v| over random pairs; should not exceed lipschitz().
inline double lipschitz_probe(const DiffusionCoefficient& b, int pairs, std::uint64_t seed, double scale = 10.0) {
  StreamRng rng(CounterRng(seed), 0, Purpose::Test);
  double worst = 0;
  for (int i = 0; i < pairs; ++i) {
    double u = scale * rng.normal(), v = scale * rng.normal();
    if (u == v) continue;
    worst = std::max(worst, std::abs(b(u) - b(v)) / std::abs(u - v));
  }
  return worst;
}

enum class ZeroMode { Drop, Keep };

inline const char* zero_mode_name(ZeroMode z) { return z == ZeroMode::Drop ? "drop" : "keep"; }

// Eigenvalues f^(xi_j) on the half-spectrum of the grid.
struct NoiseSpec {
  TorusGrid grid;
  std::vector<double> eigenvalues;
  ZeroMode zero_mode = ZeroMode::Keep;

  // eigenvalue at integer frequency (j_1..j_d), any signs
  double eigenvalue_at(std::span<const int> j) const {
    if (static_cast<int>(j.size()) != grid.d) fail(Errc::InvalidArgument, "frequency index has wrong dimension");
    std::vector<int> idx(j.begin(), j.end());
    int& last = idx.back();
    last = ((last % grid.n) + grid.n) % grid.n;
    if (last > grid.n / 2) {
      // use Hermitian symmetry: lambda_{-j} = lambda_j
      for (auto& v : idx) v = -v;
      last = ((last % grid.n) + grid.n) % grid.n;
    }
    std::size_t m = 0;
    for (int k = 0; k < grid.d; ++k) {
      int v = ((idx[k] % grid.n) + grid.n) % grid.n;
      m = k == grid.d - 1 ? m * (grid.n / 2 + 1) + v : m * grid.n + v;
    }
    return eigenvalues[m];
  }
  double eigenvalue_at(std::initializer_list<int> j) const {
    std::vector<int> v(j);
    return eigenvalue_at(std::span<const int>(v));
  }
};

inline NoiseSpec build_noise_spec(const SpectralMeasure& m, const TorusGrid& grid, ZeroMode zero = ZeroMode::Keep) {
  grid.validate();
  NoiseSpec s{grid, grid.mode_norm2(), zero};
  for (std::size_t j = 0; j < s.eigenvalues.size(); ++j) {
    if (j == 0 && zero == ZeroMode::Drop) {
      s.eigenvalues[0] = 0.0;
      continue;
    }
    double r = std::sqrt(s.eigenvalues[j]);
    double v;
    try {
      v = f_hat_eval(m, r, grid.d);
    } catch (const Error& e) {
      if (e.code() != Errc::DivergentAtZero) throw;
      v = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(v) || v < 0)
      fail(Errc::DivergentDensityAtNode, "spectral density is not finite at |xi| = " + std::to_string(r));
    s.eigenvalues[j] = v;
  }
  return s;
}

// f_L(z) = L^{-d} sum_j f^(xi_j) e^{i xi_j z} at every site z.
inline std::vector<double> lattice_correlation(const NoiseSpec& s) {
  Spectrum c(s.eigenvalues.begin(), s.eigenvalues.end());
  std::vector<double> out(s.grid.sites());
  TorusFft(s.grid).backward(c, out);
  const double inv = 1.0 / s.grid.volume();
  for (auto& v : out) v *= inv;
  return out;
}

namespace detail {

template <class W>
double lattice_sum(const NoiseSpec& s, W&& w, bool skip_zero) {
  auto k2 = s.grid.mode_norm2();
  auto mult = s.grid.mode_weight();
  CompensatedSum acc;
  for (std::size_t j = skip_zero ? 1 : 0; j < k2.size(); ++j) acc.add(mult[j] * s.eigenvalues[j] * w(k2[j]));
  return acc.value() / s.grid.volume();
}

}  // namespace detail

// Lattice weak-disorder parameter: L^{-d} sum_{j != 0} f^(xi_j) / |xi_j|^2.
inline double upsilon_h(const NoiseSpec& s) {
  return detail::lattice_sum(s, [](double k2) { return 1.0 / k2; }, true);
}
inline double lattice_k(const NoiseSpec& s, double t) {
  return detail::lattice_sum(s, [t](double k2) { return std::exp(-t * k2); }, false);
}
inline double lattice_H(const NoiseSpec& s, double t) {
  return detail::lattice_sum(s, [t](double k2) { return std::exp(-t * k2) / k2; }, true);
}

// Draws the noise increment and advances a field by one exponential-Euler step.
class LatticeStepper {
 public:
  LatticeStepper(const NoiseSpec& spec, double dt)
      : spec_(spec), dt_(dt), fft_(spec.grid), amp_(spec.eigenvalues.size()), heat_(heat_symbol(spec.grid, dt)) {
    if (!(dt > 0)) fail(Errc::InvalidArgument, "dt must be positive");
    const double N = static_cast<double>(spec.grid.sites());
    const double a = std::sqrt(dt / spec.grid.cell_volume()) / N;
    for (std::size_t j = 0; j < amp_.size(); ++j) amp_[j] = std::sqrt(spec.eigenvalues[j]) * a;
    for (auto& v : heat_) v /= N;
  }

  const NoiseSpec& spec() const { return spec_; }
  double dt() const { return dt_; }

  // Increment for absolute step `step` of replicate `stream`.
  void increment(const CounterRng& rng, std::uint32_t stream, std::int64_t step, std::span<double> out) const {
    rng.normals(stream, Purpose::Noise, step, out);
    fft_.forward(out, spec_buf_);
    for (std::size_t j = 0; j < spec_buf_.size(); ++j) spec_buf_[j] *= amp_[j];
    fft_.backward(spec_buf_, out);
  }

  // u <- P_dt (u + b(u) dW)
  void advance(std::span<double> u, const DiffusionCoefficient& b, std::span<const double> dW) const {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += b(u[i]) * dW[i];
    fft_.forward(u, spec_buf_);
    for (std::size_t j = 0; j < spec_buf_.size(); ++j) spec_buf_[j] *= heat_[j];
    fft_.backward(spec_buf_, u);
  }

 private:
  NoiseSpec spec_;
  double dt_;
  TorusFft fft_;
  std::vector<double> amp_;
  std::vector<double> heat_;
  mutable Spectrum spec_buf_;
};

// The returned state's time field holds the increment length dt.
inline FieldState sample_increment(const NoiseSpec& spec, double dt, const CounterRng& rng, std::uint32_t stream,
                                   std::int64_t step) {
  FieldState f(spec.grid, 0.0, dt);
  LatticeStepper(spec, dt).increment(rng, stream, step, f.values);
  return f;
}

inline FieldState step(const FieldState& state, const DiffusionCoefficient& b, const FieldState& incr, double dt) {
  if (state.grid != incr.grid) fail(Errc::GridMismatch, "increment grid differs from state grid");
  if (std::abs(incr.time - dt) > 1e-12 * dt) fail(Errc::GridMismatch, "increment was sampled with another dt");
  if (state.values.size() != state.grid.sites() || incr.values.size() != incr.grid.sites())
    fail(Errc::GridMismatch, "field length does not match grid");
  FieldState out = state;
  SpectralMultiplier P(state.grid, heat_symbol(state.grid, dt));
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b(out.values[i]) * incr.values[i];
  P.apply(out.values);
  out.time += dt;
  return out;
}

enum class DepositMode { Nearest, Gaussian };

// Samples an initial measure on the grid. Atoms go to the nearest site with
// weight w/h^d (or as a heat kernel of variance h^2 in Gaussian mode).
inline FieldState deposit_measure(const RoughMeasure& mu, const TorusGrid& g, DepositMode mode = DepositMode::Nearest) {
  FieldState f(g);
  const double h = g.h(), vol = g.cell_volume();
  auto add_atom = [&](std::span<const double> x, double w) {
    if (static_cast<int>(x.size()) != g.d) fail(Errc::InvalidDimension, "atom dimension differs from grid");
    if (mode == DepositMode::Nearest) {
      std::vector<int> idx(g.d);
      for (int k = 0; k < g.d; ++k) idx[k] = static_cast<int>(std::llround(x[k] / h));
      f.values[g.site_of(idx)] += w / vol;
      return;
    }
    const double eps = h * h;
    for (std::size_t s = 0; s < f.values.size(); ++s) {
      auto y = g.coords(s);
      double r2 = 0;
      for (int k = 0; k < g.d; ++k) {
        double z = std::remainder(y[k] - x[k], g.L);
        r2 += z * z;
      }
      f.values[s] += w * heat_kernel_r2(g.d, eps, r2);
    }
  };
  for (const auto& term : mu.terms()) {
    const double c = term.coef;
    if (auto* dc = std::get_if<DiracComb>(&term.part)) {
      for (const auto& a : dc->atoms) add_atom(a.x, c * a.w);
    } else if (auto* fl = std::get_if<Flat>(&term.part)) {
      for (auto& v : f.values) v += c * fl->c;
    } else if (auto* pl = std::get_if<PowerLawDensity>(&term.part)) {
      if (!(pl->alpha < g.d)) fail(Errc::NotIntegrable, "power-law density is not locally integrable");
      for (std::size_t s = 0; s < f.values.size(); ++s) {
        double r2 = g.radius2(s);
        if (r2 > 0) {
          f.values[s] += c * std::pow(r2, -0.5 * pl->alpha);
        } else {
          // average over the ball with the cell's volume
          double R = std::pow(vol * std::tgamma(0.5 * g.d + 1) / std::pow(M_PI, 0.5 * g.d), 1.0 / g.d);
          f.values[s] += c * g.d / (g.d - pl->alpha) * std::pow(R, -pl->alpha);
        }
      }
    } else if (auto* lc = std::get_if<LatticeComb>(&term.part)) {
      // atoms of (2 pi Z)^d inside the fundamental cell [-L/2, L/2)^d
      const double p = 2.0 * M_PI;
      int kmax = std::min(lc->truncation, static_cast<int>(std::floor(0.5 * g.L / p)) + 1);
      std::vector<int> k(g.d, -kmax);
      std::vector<double> x(g.d);
      while (true) {
        bool inside = true;
        for (int i = 0; i < g.d; ++i) {
          x[i] = p * k[i];
          inside = inside && x[i] >= -0.5 * g.L - 1e-12 * g.L && x[i] < 0.5 * g.L - 1e-12 * g.L;
        }
        if (inside) add_atom(x, c);
        int i = g.d - 1;
        while (i >= 0 && ++k[i] > kmax) k[i--] = -kmax;
        if (i < 0) break;
      }
    } else {
      fail(Errc::InvalidArgument, "initial measure fails the rough-data integrability condition");
    }
  }
  return f;
}

struct SimulationConfig {
  TorusGrid grid;
  SpectralMeasure kernel = SpectralMeasure(GaussianSpectral{1.0});
  std::string kernel_id = "gaussian:1";
  DiffusionCoefficient b = DiffusionCoefficient::pam(1.0);
  RoughMeasure mu = RoughMeasure::flat(1.0);
  std::string mu_id = "flat:1";
  std::optional<double> dt;  // default min(0.01, h^2)
  double T = 1.0;
  std::vector<double> snapshot_times;  // default {T}
  int replicates = 1;
  std::uint64_t seed = 0;
  std::vector<double> K_list;
  ZeroMode zero_mode = ZeroMode::Drop;
  DepositMode deposit = DepositMode::Nearest;
  unsigned threads = 0;

  double step_size() const { return dt ? *dt : std::min(0.01, grid.h() * grid.h()); }
  std::vector<double> times() const { return snapshot_times.empty() ? std::vector<double>{T} : snapshot_times; }
  void validate() const {
    grid.validate();
    if (!(step_size() > 0)) fail(Errc::InvalidArgument, "dt must be positive");
    if (!(T > 0)) fail(Errc::InvalidArgument, "horizon must be positive");
    if (replicates < 1) fail(Errc::InvalidArgument, "replicates must be >= 1");
    for (double t : times())
      if (t < 0 || t > T * (1 + 1e-12)) fail(Errc::InvalidArgument, "snapshot time outside [0, T]");
    if (!rough_icon_check(mu)) fail(Errc::InvalidArgument, "initial measure fails the rough-data integrability condition");
  }
  // e^{-L^2/(8T)}: size of heat-kernel mass wrapped around the torus by time T
  double wraparound_bound(double horizon) const { return std::exp(-grid.L * grid.L / (8.0 * horizon)); }
};

struct SnapshotSet {
  TorusGrid grid;
  std::vector<double> times;
  // fields[replicate][time index]
  std::vector<std::vector<FieldState>> fields;
  int negative_mean_events = 0;

  const FieldState& at(std::size_t replicate, std::size_t ti) const { return fields.at(replicate).at(ti); }
  std::size_t time_index(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    fail(Errc::MissingTime, "no snapshot at t = " + std::to_string(t));
  }
};

namespace detail {

inline std::int64_t steps_for(double t, double dt) { return static_cast<std::int64_t>(std::llround(t / dt)); }

inline double grid_mean(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / v.size();
}

}  // namespace detail

// Streams every snapshot to `sink(replicate, time_index, state)`. Calls for
// different replicates may run concurrently.
template <class Sink>
int simulate_each(const SimulationConfig& cfg, Sink&& sink) {
  cfg.validate();
  const double dt = cfg.step_size();
  const auto times = cfg.times();
  std::vector<std::int64_t> at_step(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) at_step[i] = detail::steps_for(times[i], dt);
  const std::int64_t n_steps = detail::steps_for(cfg.T, dt);
  if (!CounterRng::step_in_range(n_steps)) fail(Errc::InconsistentSeed, "step count exceeds the counter range");
  const NoiseSpec spec = build_noise_spec(cfg.kernel, cfg.grid, cfg.zero_mode);
  const FieldState u0 = deposit_measure(cfg.mu, cfg.grid, cfg.deposit);
  const CounterRng rng(cfg.seed);
  std::vector<int> negatives(cfg.replicates, 0);

  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    LatticeStepper st(spec, dt);
    FieldState u = u0;
    std::vector<double> dW(cfg.grid.sites());
    std::int64_t s = 0;
    auto emit = [&] {
      for (std::size_t i = 0; i < times.size(); ++i)
        if (at_step[i] == s) sink(r, i, static_cast<const FieldState&>(u));
    };
    emit();
    for (; s < n_steps;) {
      st.increment(rng, static_cast<std::uint32_t>(r), s, dW);
      st.advance(u.values, cfg.b, dW);
      ++s;
      u.time = s * dt;
      if (detail::grid_mean(u.values) <= 0) ++negatives[r];
      emit();
    }
  });
  int total = 0;
  for (int v : negatives) total += v;
  return total;
}

inline SnapshotSet simulate(const SimulationConfig& cfg) {
  SnapshotSet out;
  out.grid = cfg.grid;
  out.times = cfg.times();
  out.fields.assign(cfg.replicates, std::vector<FieldState>(out.times.size()));
  out.negative_mean_events = simulate_each(cfg, [&](std::size_t r, std::size_t i, const FieldState& u) {
    out.fields[r][i] = u;
  });
  return out;
}

// Restart coupling. For every replicate, u_K starts from mu at absolute time
// -(K+1) and runs to time 0; all u_K of a replicate consume the same increment
// at a given absolute step. `sink(replicate, fields)` receives u_K(0) ordered as K_list.
template <class Sink>
void restart_each(const SimulationConfig& cfg, const std::vector<double>& K_list, Sink&& sink) {
  cfg.validate();
  if (K_list.empty()) fail(Errc::InvalidArgument, "restart depths are empty");
  for (std::size_t i = 0; i < K_list.size(); ++i) {
    if (!(K_list[i] > 0)) fail(Errc::InvalidArgument, "restart depths must be positive");
    if (i && !(K_list[i] > K_list[i - 1])) fail(Errc::InvalidArgument, "restart depths must increase");
  }
  if (static_cast<std::uint64_t>(cfg.replicates) > 0xFFFFFFFFull)
    fail(Errc::InconsistentSeed, "replicate count exceeds the stream range");
  const double dt = cfg.step_size();
  std::vector<std::int64_t> start(K_list.size());
  for (std::size_t i = 0; i < K_list.size(); ++i) start[i] = -detail::steps_for(K_list[i] + 1.0, dt);
  if (!CounterRng::step_in_range(start.back())) fail(Errc::InconsistentSeed, "restart depth exceeds the counter range");
  const NoiseSpec spec = build_noise_spec(cfg.kernel, cfg.grid, cfg.zero_mode);
  const FieldState u0 = deposit_measure(cfg.mu, cfg.grid, cfg.deposit);
  const CounterRng rng(cfg.seed);

  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    LatticeStepper st(spec, dt);
    std::vector<FieldState> u(K_list.size(), u0);
    for (std::size_t i = 0; i < u.size(); ++i) u[i].time = start[i] * dt;
    std::vector<double> dW(cfg.grid.sites());
    for (std::int64_t s = start.back(); s < 0; ++s) {
      st.increment(rng, static_cast<std::uint32_t>(r), s, dW);
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (s < start[i]) continue;
        st.advance(u[i].values, cfg.b, dW);
        u[i].time = (s + 1) * dt;
      }
    }
    sink(r, static_cast<const std::vector<FieldState>&>(u));
  });
}

// All replicates' u_K(0), keyed by K.
inline std::map<double, std::vector<FieldState>> restart_pair(const SimulationConfig& cfg, const std::vector<double>& K_list) {
  std::vector<std::vector<FieldState>> per(cfg.replicates);
  restart_each(cfg, K_list, [&](std::size_t r, const std::vector<FieldState>& u) { per[r] = u; });
  std::map<double, std::vector<FieldState>> out;
  for (std::size_t i = 0; i < K_list.size(); ++i) {
    auto& v = out[K_list[i]];
    for (auto& p : per) v.push_back(std::move(p[i]));
  }
  return out;
}

struct MomentPdeResult {
  std::vector<double> times;
  std::vector<double> m0;  // M(t, 0) = E[u(t,x)^2]
  std::vector<double> field;  // M(T, z)
};

// Second-moment correlation M(t,z) = E[u(t,x)u(t,x+z)] for PAM with flat data:
// dM/dt = Delta M + lambda^2 f_L M, solved by Lie splitting.
inline MomentPdeResult moment_pde_oracle(const DiffusionCoefficient& b, const SpectralMeasure& m, const TorusGrid& grid,
                                         double T, double dt, double c = 1.0, ZeroMode zero = ZeroMode::Drop,
                                         int record_every = 1) {
  if (b.kind() != DiffusionCoefficient::Kind::PAM) fail(Errc::UnsupportedCoefficient, "moment equation needs b(u) = lambda u");
  if (!(dt > 0) || !(T > 0)) fail(Errc::InvalidArgument, "dt and T must be positive");
  const auto spec = build_noise_spec(m, grid, zero);
  auto fL = lattice_correlation(spec);
  const double l2 = b.lambda() * b.lambda();
  for (auto& v : fL) v = std::exp(l2 * v * dt);
  SpectralMultiplier P(grid, heat_symbol(grid, dt, 1.0));
  MomentPdeResult out;
  out.field.assign(grid.sites(), c * c);
  out.times.push_back(0);
  out.m0.push_back(c * c);
  const std::int64_t n = detail::steps_for(T, dt);
  for (std::int64_t s = 1; s <= n; ++s) {
    P.apply(out.field);
    for (std::size_t i = 0; i < fL.size(); ++i) out.field[i] *= fL[i];
    if (s % record_every == 0 || s == n) {
      out.times.push_back(s * dt);
      out.m0.push_back(out.field[0]);
    }
  }
  return out;
}

struct IsometryCheck {
  double empirical = 0;
  double expected = 0;
  double se = 0;
  double relative_error = 0;
  double z_score = 0;
};

// Var(sum_x v(x) dW(x) h^d) against dt sum sum v(x) f_L(x-x') v(x') h^{2d}.
inline IsometryCheck ito_isometry_check(const NoiseSpec& spec, double dt, std::span<const double> v, int samples,
                                        std::uint64_t seed = 0) {
  const auto& g = spec.grid;
  if (v.size() != g.sites()) fail(Errc::GridMismatch, "test field length does not match grid");
  if (samples < 2) fail(Errc::InvalidArgument, "need at least two samples");
  const double vol = g.cell_volume();
  // expected: dt h^{2d} sum_j |v^_j|^2 lambda_j L^{-d} ... via the correlation field
  auto fL = lattice_correlation(spec);
  TorusFft fft(g);
  Spectrum vh, fh;
  fft.forward(v, vh);
  fft.forward(fL, fh);
  auto w = g.mode_weight();
  CompensatedSum ex;
  for (std::size_t j = 0; j < vh.size(); ++j) ex.add(w[j] * std::norm(vh[j]) * fh[j].real());
  IsometryCheck out;
  out.expected = dt * vol * vol * ex.value() / g.sites();

  LatticeStepper st(spec, dt);
  CounterRng rng(seed);
  std::vector<double> dW(g.sites()), x2(samples);
  for (int i = 0; i < samples; ++i) {
    st.increment(rng, 0, i, dW);
    CompensatedSum s;
    for (std::size_t k = 0; k < dW.size(); ++k) s.add(v[k] * dW[k]);
    double X = s.value() * vol;
    x2[i] = X * X;
  }
  auto sm = summarize(x2);
  out.empirical = sm.mean;
  out.se = sm.se;
  if (out.expected == 0 && out.empirical == 0) return out;
  out.relative_error = std::abs(out.empirical - out.expected) / std::abs(out.expected);
  out.z_score = out.se > 0 ? std::abs(out.empirical - out.expected) / out.se : 0;
  return out;
}

struct CovarianceProbe {
  std::vector<int> lag;
  double empirical = 0;
  double se = 0;
  double expected = 0;
  double z_score() const { return se > 0 ? std::abs(empirical - expected) / se : std::abs(empirical - expected) * 1e300; }
};

// Empirical Cov(dW(x), dW(x+z)) for each lag z, averaged over sites within a
// draw and then over draws.
inline std::vector<CovarianceProbe> noise_covariance_check(const NoiseSpec& spec, double dt,
                                                           const std::vector<std::vector<int>>& lags, int samples,
                                                           std::uint64_t seed = 0, unsigned threads = 1) {
  const auto& g = spec.grid;
  auto fL = lattice_correlation(spec);
  std::vector<std::vector<double>> per(lags.size(), std::vector<double>(samples));
  std::vector<std::size_t> lag_site(lags.size());
  for (std::size_t k = 0; k < lags.size(); ++k) lag_site[k] = g.site_of(lags[k]);
  const CounterRng rng(seed);
  parallel_for(samples, threads, [&](std::size_t i) {
    LatticeStepper st(spec, dt);
    std::vector<double> dW(g.sites());
    st.increment(rng, 0, static_cast<std::int64_t>(i), dW);
    for (std::size_t k = 0; k < lags.size(); ++k) {
      CompensatedSum s;
      for (std::size_t x = 0; x < dW.size(); ++x) {
        auto idx = g.index_of(x);
        for (int a = 0; a < g.d; ++a) idx[a] += lags[k][a];
        s.add(dW[x] * dW[g.site_of(idx)]);
      }
      per[k][i] = s.value() / dW.size();
    }
  });
  std::vector<CovarianceProbe> out;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    auto sm = summarize(per[k]);
    out.push_back({lags[k], sm.mean, sm.se, dt * fL[lag_site[k]]});
  }
  return out;
}

}  // namespace pamlab
