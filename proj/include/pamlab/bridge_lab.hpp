#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pamlab/errors.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"

namespace pamlab {

enum class BridgeKind { BrownianBridge, Bessel3Bridge, ConditionedBridge };

// n+1 equispaced times on [0,1].
struct PathGrid {
  int n = 64;
  explicit PathGrid(int n_ = 64) : n(n_) {
    if (n < 16) fail(Errc::InvalidArgument, "path grid needs n >= 16");
  }
  double time(int i) const { return static_cast<double>(i) / n; }
  int index(double t) const { return static_cast<int>(std::llround(t * n)); }
};

struct BridgeSample {
  std::vector<double> values;  // n+1 entries
  BridgeKind kind = BridgeKind::BrownianBridge;
  double alpha = 0;
};

// Exact Brownian bridge on the grid by sequential conditioning.
template <class Rng>
BridgeSample sample_brownian_bridge(const PathGrid& g, Rng& rng) {
  BridgeSample s;
  s.values.assign(g.n + 1, 0.0);
  const double dt = 1.0 / g.n;
  for (int i = 0; i + 1 < g.n; ++i) {
    const double rem = 1.0 - i * dt;  // time left before this step
    const double mean = s.values[i] * (rem - dt) / rem;
    const double var = dt * (rem - dt) / rem;
    s.values[i + 1] = mean + std::sqrt(var) * rng.normal();
  }
  s.values[g.n] = 0.0;
  return s;
}

// Norm of a 3-d Brownian bridge.
template <class Rng>
BridgeSample sample_bessel3_bridge(const PathGrid& g, Rng& rng) {
  BridgeSample s;
  s.kind = BridgeKind::Bessel3Bridge;
  s.values.assign(g.n + 1, 0.0);
  for (int c = 0; c < 3; ++c) {
    auto b = sample_brownian_bridge(g, rng);
    for (int i = 0; i <= g.n; ++i) s.values[i] += b.values[i] * b.values[i];
  }
  for (auto& v : s.values) v = std::sqrt(v);
  return s;
}

// Brownian bridge at increasing times starting with 0 and ending with 1.
template <class Rng>
std::vector<double> sample_brownian_bridge_at(const std::vector<double>& times, Rng& rng) {
  std::vector<double> v(times.size(), 0.0);
  for (std::size_t i = 0; i + 2 < times.size(); ++i) {
    const double rem = 1.0 - times[i], dt = times[i + 1] - times[i];
    v[i + 1] = v[i] * (rem - dt) / rem + std::sqrt(dt * (rem - dt) / rem) * rng.normal();
  }
  return v;
}

template <class Rng>
std::vector<double> sample_bessel3_bridge_at(const std::vector<double>& times, Rng& rng) {
  std::vector<double> r(times.size(), 0.0);
  for (int c = 0; c < 3; ++c) {
    auto b = sample_brownian_bridge_at(times, rng);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i] * b[i];
  }
  for (auto& x : r) x = std::sqrt(x);
  return r;
}

// Bessel bridge marginal at time r: density sqrt(2/(pi tau^3)) y^2 e^{-y^2/(2 tau)}, tau = r(1-r).
inline double bessel_density(double tau, double y) {
  if (y < 0) return 0.0;
  return std::sqrt(2.0 / (M_PI * tau * tau * tau)) * y * y * std::exp(-y * y / (2.0 * tau));
}
inline double bessel_cdf(double tau, double y) {
  if (y <= 0) return 0.0;
  const double z = y / std::sqrt(tau);
  return std::erf(z / std::sqrt(2.0)) - std::sqrt(2.0 / M_PI) * z * std::exp(-0.5 * z * z);
}

// Generates `samples` paths with per-sample streams, in parallel.
template <class Gen>
std::vector<BridgeSample> sample_many(std::size_t samples, std::uint64_t seed, Purpose purpose, unsigned threads, Gen&& gen) {
  std::vector<BridgeSample> out(samples);
  const CounterRng base(seed);
  parallel_for(samples, threads, [&](std::size_t i) {
    StreamRng rng(base, static_cast<std::uint32_t>(i), purpose);
    out[i] = gen(rng);
  });
  return out;
}

struct CovarianceRow {
  double s = 0, t = 0;
  double empirical = 0, reference = 0, se = 0;
  double z() const { return se > 0 ? std::abs(empirical - reference) / se : (empirical == reference ? 0.0 : INFINITY); }
};

struct CovarianceReport {
  std::vector<CovarianceRow> rows;
  double max_deviation = 0;
  double max_z = 0;
};

// Empirical E[X_s X_t] (the paths are centered) against s∧t − st.
inline CovarianceReport bridge_covariance_check(const std::vector<BridgeSample>& paths,
                                                const std::vector<std::pair<double, double>>& probes) {
  if (paths.empty()) fail(Errc::InvalidArgument, "no samples");
  const PathGrid g(static_cast<int>(paths.front().values.size()) - 1);
  CovarianceReport rep;
  for (auto [s, t] : probes) {
    // probes snap to the nearest nodes; the reference uses the node times
    const int i = g.index(s), j = g.index(t);
    const double si = g.time(i), tj = g.time(j);
    std::vector<double> prod(paths.size());
    for (std::size_t k = 0; k < paths.size(); ++k) prod[k] = paths[k].values[i] * paths[k].values[j];
    auto sm = summarize(prod);
    CovarianceRow r{si, tj, sm.mean, std::min(si, tj) - si * tj, sm.se};
    rep.max_deviation = std::max(rep.max_deviation, std::abs(r.empirical - r.reference));
    rep.max_z = std::max(rep.max_z, r.z());
    rep.rows.push_back(r);
  }
  return rep;
}

struct KAlphaResult {
  double alpha = 0;
  double fraction = 0;
  double se = 0;
  double reference = 0;   // 1 - e^{-2 alpha^2}
  double bias_bound = 0;  // grid minimum sits above the path minimum
  int n = 0;
  bool brackets() const { return fraction + 5 * se >= reference && fraction - 5 * se <= reference + bias_bound; }
};

inline double k_alpha_reference(double alpha) { return -std::expm1(-2.0 * alpha * alpha); }

// Fraction of bridges whose grid minimum is >= -alpha. The bias bound is twice the
// shift of the reference under the continuity correction alpha -> alpha + 0.5826 sqrt(1/n).
inline KAlphaResult k_alpha_probability(double alpha, std::size_t samples, int n = 256, std::uint64_t seed = 0,
                                        unsigned threads = 1) {
  if (!(alpha > 0)) fail(Errc::InvalidArgument, "alpha must be positive");
  const PathGrid g(n);
  std::vector<double> hit(samples);
  const CounterRng base(seed);
  parallel_for(samples, threads, [&](std::size_t i) {
    StreamRng rng(base, static_cast<std::uint32_t>(i), Purpose::Bridge);
    auto b = sample_brownian_bridge(g, rng);
    hit[i] = *std::min_element(b.values.begin(), b.values.end()) >= -alpha ? 1.0 : 0.0;
  });
  auto sm = summarize(hit);
  KAlphaResult r;
  r.alpha = alpha;
  r.fraction = sm.mean;
  r.se = std::sqrt(std::max(sm.mean * (1 - sm.mean), 1.0 / samples) / samples);
  r.reference = k_alpha_reference(alpha);
  r.bias_bound = 2.0 * (k_alpha_reference(alpha + 0.5826 / std::sqrt(static_cast<double>(n))) - r.reference);
  r.n = n;
  return r;
}

// KS distance between the paths' values at time r and the Bessel marginal.
inline double bessel_marginal_check(const std::vector<BridgeSample>& paths, double r) {
  if (!(r > 0 && r < 1)) fail(Errc::InvalidArgument, "r must lie in (0,1)");
  if (paths.empty()) fail(Errc::InvalidArgument, "no samples");
  const PathGrid g(static_cast<int>(paths.front().values.size()) - 1);
  const int i = g.index(r);
  std::vector<double> x(paths.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = paths[k].values[i];
  const double tau = r * (1 - r);
  return ks_distance(std::move(x), [tau](double y) { return bessel_cdf(tau, y); });
}

struct BianeReport {
  CovarianceReport covariance;
  double max_mean_z = 0;  // largest |mean(beta_t)| / SE over probe times
  double beta0_max = 0;   // largest |beta_0|, exactly 0
};

// beta_tau = e(tau + zeta mod 1) - e(zeta) with zeta uniform on [0,1) independent
// of the Bessel bridge e. Each e is sampled exactly at the rotated grid times, so
// no interpolation enters.
inline BianeReport biane_check(std::size_t samples, int n, std::uint64_t seed,
                               const std::vector<std::pair<double, double>>& probes, unsigned threads = 1) {
  const PathGrid g(n);
  const CounterRng base(seed);
  std::vector<BridgeSample> beta(samples);
  parallel_for(samples, threads, [&](std::size_t k) {
    const double zeta = base.uniform(static_cast<std::uint32_t>(k), Purpose::Zeta, 0, 0);
    // rotated times in increasing order: zeta + i/n for i < n - m, then wrapped ones
    std::vector<double> times(n + 1);
    for (int i = 0; i <= n; ++i) times[i] = std::fmod(zeta + g.time(i), 1.0);
    std::vector<double> sorted(times.begin(), times.end() - 1);
    sorted.push_back(0.0);
    sorted.push_back(1.0);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    StreamRng rng(base, static_cast<std::uint32_t>(k), Purpose::Bridge);
    auto e = sample_bessel3_bridge_at(sorted, rng);
    auto value = [&](double u) {
      auto it = std::lower_bound(sorted.begin(), sorted.end(), u);
      return e[static_cast<std::size_t>(it - sorted.begin())];
    };
    const double ez = value(times[0]);
    beta[k].values.resize(n + 1);
    for (int i = 0; i < n; ++i) beta[k].values[i] = value(times[i]) - ez;
    beta[k].values[n] = 0.0;  // rotation by a full turn
  });
  BianeReport rep;
  for (const auto& b : beta) rep.beta0_max = std::max(rep.beta0_max, std::abs(b.values[0]));
  rep.covariance = bridge_covariance_check(beta, probes);
  for (auto [s, t] : probes) {
    for (double u : {s, t}) {
      std::vector<double> x(beta.size());
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = beta[k].values[g.index(u)];
      auto sm = summarize(x);
      double z = sm.se > 0 ? std::abs(sm.mean) / sm.se : 0.0;
      rep.max_mean_z = std::max(rep.max_mean_z, z);
    }
  }
  return rep;
}

struct ConditionedRow {
  double alpha = 0;
  double acceptance = 0;
  double acceptance_se = 0;
  std::uint64_t attempts = 0;
  double ks = 0;
};

struct ConditionedReport {
  std::vector<ConditionedRow> rows;
  bool decreasing = true;
};

// Rejection-samples bridges whose whole path stays >= -alpha (no shift) and
// compares their time-1/2 marginal with the Bessel marginal.
inline ConditionedReport conditioned_bridge_vs_bessel(const std::vector<double>& alphas, std::size_t samples, int n = 64,
                                                      std::uint64_t seed = 0, std::uint64_t max_attempts = 200000000,
                                                      unsigned threads = 1) {
  const PathGrid g(n);
  const CounterRng base(seed);
  const int mid = g.index(0.5);
  ConditionedReport rep;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const double alpha = alphas[a];
    if (!(alpha > 0)) fail(Errc::InvalidArgument, "alpha must be positive");
    if (a && !(alpha < alphas[a - 1])) fail(Errc::InvalidArgument, "alpha list must decrease");
    const double expect = k_alpha_reference(alpha);
    if (static_cast<double>(samples) / expect > static_cast<double>(max_attempts))
      fail(Errc::RejectionBudgetExceeded, "expected attempts exceed the rejection budget");
    // sample i draws attempts from its own stream until one is accepted
    std::vector<double> x(samples);
    std::vector<std::uint64_t> tries(samples, 0);
    std::atomic<std::uint64_t> total{0};
    parallel_for(samples, threads, [&](std::size_t i) {
      StreamRng rng(base, static_cast<std::uint32_t>(i), Purpose::BridgeAux);
      // distinct alpha values use distinct stretches of the stream
      for (std::size_t skip = 0; skip < a; ++skip) rng.discard_block(std::uint64_t(1) << 40);
      while (true) {
        ++tries[i];
        if (total.fetch_add(1) >= max_attempts) fail(Errc::RejectionBudgetExceeded, "rejection budget exhausted");
        auto b = sample_brownian_bridge(g, rng);
        if (*std::min_element(b.values.begin(), b.values.end()) < -alpha) continue;
        // survive the excursions between nodes too: the bridge over one cell
        // from a to b stays above -alpha with probability 1 - e^{-2(a+alpha)(b+alpha)/dt}
        double keep = 1.0;
        for (int k = 0; k < n; ++k)
          keep *= -std::expm1(-2.0 * (b.values[k] + alpha) * (b.values[k + 1] + alpha) * n);
        if (rng.uniform() < keep) {
          x[i] = b.values[mid];
          return;
        }
      }
    });
    ConditionedRow row;
    row.alpha = alpha;
    for (auto t : tries) row.attempts += t;
    row.acceptance = static_cast<double>(samples) / row.attempts;
    row.acceptance_se = std::sqrt(row.acceptance * (1 - row.acceptance) / row.attempts);
    row.ks = ks_distance(std::move(x), [](double y) { return bessel_cdf(0.25, y); });
    if (!rep.rows.empty() && !(row.ks < rep.rows.back().ks)) rep.decreasing = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace pamlab
