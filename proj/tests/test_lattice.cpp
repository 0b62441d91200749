#include <gtest/gtest.h>

#include <cmath>

#include "pamlab/moment_lab.hpp"

using namespace pamlab;

namespace {

const SpectralMeasure gauss{GaussianSpectral{1.0}};

// periodized continuum heat kernel on [0,L)^d, product over coordinates
double torus_heat_kernel(const TorusGrid& g, double t, std::size_t site) {
  auto x = g.coords(site);
  double p = 1;
  for (double xi : x) {
    double s = 0;
    for (int k = -20; k <= 20; ++k) s += heat_kernel_r2(1, t, (xi + k * g.L) * (xi + k * g.L));
    p *= s;
  }
  return p;
}

SimulationConfig base_config(int d = 3, double L = 8, int n = 8) {
  SimulationConfig c;
  c.grid = TorusGrid(d, L, n);
  c.kernel = gauss;
  c.dt = 0.01;
  c.T = 0.2;
  c.replicates = 4;
  c.seed = 11;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(NoiseSpec, WhiteAllOnes) {
  auto s = build_noise_spec(SpectralMeasure(White{}), TorusGrid(2, 4.0, 8));
  for (double v : s.eigenvalues) EXPECT_EQ(v, 1.0);
}

TEST(NoiseSpec, GaussianAndBesselNodes) {
  TorusGrid g(1, 2 * M_PI, 8);
  auto s = build_noise_spec(gauss, g);
  EXPECT_NEAR(s.eigenvalue_at({2}), std::exp(-4.0), 1e-15);
  EXPECT_NEAR(s.eigenvalue_at({-2}), std::exp(-4.0), 1e-15);
  EXPECT_NEAR(build_noise_spec(SpectralMeasure(BesselAsCorrelation{4}), g).eigenvalue_at({1}), 0.25, 1e-15);
}

TEST(NoiseSpec, ZeroModeDrop) {
  auto s = build_noise_spec(gauss, TorusGrid(3, 8, 8), ZeroMode::Drop);
  EXPECT_EQ(s.eigenvalue_at({0, 0, 0}), 0.0);
  EXPECT_GT(s.eigenvalue_at({1, 0, 0}), 0.0);
}

TEST(NoiseSpec, DivergentDensityAtNode) {
  // Bessel spectral density is infinite at the origin
  try {
    build_noise_spec(SpectralMeasure(BesselAsSpectral{1.0}), TorusGrid(3, 8, 8), ZeroMode::Keep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DivergentDensityAtNode);
  }
}

TEST(LatticeUpsilon, KnownGridValues) {
  EXPECT_NEAR(upsilon_h(build_noise_spec(gauss, TorusGrid(3, 8, 16), ZeroMode::Drop)), 0.0186, 5e-5);
  EXPECT_NEAR(upsilon_h(build_noise_spec(gauss, TorusGrid(3, 16, 32), ZeroMode::Drop)), 0.0310, 5e-5);
}

TEST(LatticeUpsilon, HIsIntegralOfK) {
  auto s = build_noise_spec(gauss, TorusGrid(3, 8, 8), ZeroMode::Drop);
  // trapezoid of k over [0, 1] against H(0) - H(1)
  const int N = 2000;
  double acc = 0;
  for (int i = 0; i <= N; ++i) acc += (i == 0 || i == N ? 0.5 : 1.0) * lattice_k(s, static_cast<double>(i) / N);
  acc /= N;
  EXPECT_NEAR(acc, lattice_H(s, 0.0) - lattice_H(s, 1.0), 1e-7);
  EXPECT_NEAR(lattice_H(s, 0.0), upsilon_h(s), 1e-15);
}

TEST(Increment, WhiteVarianceIsDtOverH) {
  TorusGrid g(1, 8.0, 16);
  auto s = build_noise_spec(SpectralMeasure(White{}), g);
  const double dt = 0.01;
  CounterRng rng(3);
  LatticeStepper st(s, dt);
  std::vector<double> dW(g.sites()), x2;
  for (int i = 0; i < 20000; ++i) {
    st.increment(rng, 0, i, dW);
    for (double v : dW) x2.push_back(v * v);
  }
  auto sm = summarize(x2);
  // sites within a draw are independent for white noise
  EXPECT_LT(std::abs(sm.mean - dt / g.h()), 5 * sm.se);
}

TEST(Increment, CenteredAndCorrelatedAsFL) {
  auto s = build_noise_spec(gauss, TorusGrid(3, 8, 16));
  auto probes = noise_covariance_check(s, 0.01, {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}}, 2000, 5);
  for (const auto& p : probes) EXPECT_LT(p.z_score(), 5.0);
  auto inc = sample_increment(s, 0.01, CounterRng(1), 0, 0);
  EXPECT_DOUBLE_EQ(inc.time, 0.01);
  EXPECT_EQ(inc.values.size(), s.grid.sites());
}

TEST(Isometry, ZeroField) {
  auto s = build_noise_spec(gauss, TorusGrid(3, 8, 8));
  std::vector<double> v(s.grid.sites(), 0.0);
  auto r = ito_isometry_check(s, 0.01, v, 10);
  EXPECT_EQ(r.empirical, 0.0);
  EXPECT_EQ(r.expected, 0.0);
}

TEST(Isometry, WhiteConstantAndGaussianOneHot) {
  TorusGrid g1(1, 8.0, 16);
  auto w = build_noise_spec(SpectralMeasure(White{}), g1);
  std::vector<double> ones(g1.sites(), 1.0);
  auto r = ito_isometry_check(w, 0.01, ones, 20000, 1);
  EXPECT_NEAR(r.expected, 0.01 * g1.L, 1e-14);
  EXPECT_LT(r.z_score, 5.0);

  TorusGrid g3(3, 8, 8);
  auto s = build_noise_spec(gauss, g3);
  std::vector<double> hot(g3.sites(), 0.0);
  hot[0] = 1.0;
  auto q = ito_isometry_check(s, 0.01, hot, 20000, 2);
  EXPECT_NEAR(q.expected, 0.01 * lattice_correlation(s)[0] * std::pow(g3.cell_volume(), 2), 1e-15);
  EXPECT_LT(q.z_score, 5.0);
}

TEST(Step, ConstantsFixedWithoutNoiseCoupling) {
  TorusGrid g(3, 8, 8);
  auto s = build_noise_spec(gauss, g);
  FieldState u(g, 2.5, 0.0);
  auto inc = sample_increment(s, 0.01, CounterRng(1), 0, 0);
  auto v = step(u, DiffusionCoefficient::pam(0.0), inc, 0.01);
  for (double x : v.values) EXPECT_NEAR(x, 2.5, 1e-14);
  EXPECT_NEAR(v.time, 0.01, 1e-15);
}

TEST(Step, CosineModeDecaysExactly) {
  TorusGrid g(2, 2 * M_PI, 16);
  FieldState u(g, 0.0, 0.0);
  for (std::size_t i = 0; i < g.sites(); ++i) u.values[i] = std::cos(g.coords(i)[0] * 2 + g.coords(i)[1]);
  auto inc = sample_increment(build_noise_spec(gauss, g), 0.05, CounterRng(1), 0, 0);
  auto v = step(u, DiffusionCoefficient::pam(0.0), inc, 0.05);
  const double f = std::exp(-5.0 * 0.05 / 2);
  for (std::size_t i = 0; i < g.sites(); ++i) EXPECT_NEAR(v.values[i], u.values[i] * f, 1e-13);
}

TEST(Step, RejectsMismatch) {
  TorusGrid g(3, 8, 8);
  auto s = build_noise_spec(gauss, g);
  auto inc = sample_increment(s, 0.01, CounterRng(1), 0, 0);
  FieldState other(TorusGrid(3, 8, 16), 1.0, 0.0);
  EXPECT_THROW(step(other, DiffusionCoefficient::pam(1), inc, 0.01), Error);
  FieldState u(g, 1.0, 0.0);
  EXPECT_THROW(step(u, DiffusionCoefficient::pam(1), inc, 0.02), Error);
}

TEST(Coefficient, LipschitzConstants) {
  EXPECT_EQ(DiffusionCoefficient::pam(-2).lipschitz(), 2.0);
  auto sat = DiffusionCoefficient::saturating(1.5, 1.0);
  EXPECT_LE(lipschitz_probe(sat, 2000, 1), 1.5 + 1e-12);
  EXPECT_LE(lipschitz_probe(DiffusionCoefficient::sine(0.7), 2000, 1), 0.7 + 1e-12);
  EXPECT_DOUBLE_EQ(DiffusionCoefficient::pam(3)(2.0), 6.0);
}

TEST(Simulate, ZeroCouplingFlatStaysOne) {
  auto c = base_config();
  c.b = DiffusionCoefficient::pam(0.0);
  c.snapshot_times = {0.0, 0.1, 0.2};
  auto s = simulate(c);
  for (const auto& rep : s.fields)
    for (const auto& f : rep)
      for (double v : f.values) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Simulate, ZeroCouplingDiracIsTorusHeatKernel) {
  auto c = base_config(3, 8, 16);
  c.b = DiffusionCoefficient::pam(0.0);
  c.mu = RoughMeasure::dirac({0, 0, 0});
  c.dt = 0.05;
  c.T = 1.0;
  c.replicates = 1;
  auto s = simulate(c);
  const auto& f = s.at(0, 0);
  double worst = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    worst = std::max(worst, std::abs(f.values[i] - torus_heat_kernel(c.grid, 1.0, i)));
  EXPECT_LT(worst, 1e-8 * torus_heat_kernel(c.grid, 1.0, 0));
}

TEST(Simulate, MeanStaysOne) {
  auto c = base_config(3, 8, 8);
  c.T = 0.5;
  c.replicates = 400;
  c.threads = 0;
  auto s = simulate(c);
  auto e = estimate_moment(s, 1.0, 0.5);
  EXPECT_LT(std::abs(e.mean - 1.0), 5 * e.se);
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  auto c = base_config();
  c.replicates = 5;
  c.threads = 1;
  auto a = simulate(c);
  c.threads = 3;
  auto b = simulate(c);
  for (std::size_t r = 0; r < a.fields.size(); ++r) EXPECT_EQ(a.at(r, 0).values, b.at(r, 0).values);
}

TEST(Simulate, MissingTime) {
  auto c = base_config();
  auto s = simulate(c);
  try {
    s.time_index(0.123);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingTime);
  }
}

TEST(Restart, ZeroCouplingFlat) {
  auto c = base_config();
  c.b = DiffusionCoefficient::pam(0.0);
  c.replicates = 2;
  auto m = restart_pair(c, {1, 2});
  for (double K : {1.0, 2.0})
    for (const auto& f : m.at(K))
      for (double v : f.values) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Restart, ZeroCouplingDiracAgesByDepth) {
  auto c = base_config(3, 8, 16);
  c.b = DiffusionCoefficient::pam(0.0);
  c.mu = RoughMeasure::dirac({0, 0, 0});
  c.dt = 0.05;
  c.replicates = 1;
  auto m = restart_pair(c, {1, 3});
  // u_K starts at -(K+1), so at time 0 it has aged K+1
  for (double K : {1.0, 3.0}) {
    const auto& f = m.at(K).front();
    for (std::size_t i : {std::size_t(0), std::size_t(37)})
      EXPECT_NEAR(f.values[i], torus_heat_kernel(c.grid, K + 1, i), 1e-8 * torus_heat_kernel(c.grid, K + 1, 0));
  }
}

TEST(Restart, SharedNoiseAcrossDepths) {
  // depths 1 and 1.5 differ only by what happens before time -2
  auto c = base_config();
  c.replicates = 1;
  c.b = DiffusionCoefficient::pam(0.5);
  auto m = restart_pair(c, {1, 1.5});
  double diff = 0;
  for (std::size_t i = 0; i < m.at(1).front().values.size(); ++i)
    diff = std::max(diff, std::abs(m.at(1).front().values[i] - m.at(1.5).front().values[i]));
  EXPECT_GT(diff, 0);
  EXPECT_LT(diff, 0.5);
}

TEST(MomentPde, Trivial) {
  TorusGrid g(3, 8, 8);
  auto a = moment_pde_oracle(DiffusionCoefficient::pam(0.0), gauss, g, 1.0, 0.05);
  for (double v : a.m0) EXPECT_NEAR(v, 1.0, 1e-13);
  CustomRadial zero{{0.0, 1.0, 100.0}, {0.0, 0.0, 0.0}};
  auto b = moment_pde_oracle(DiffusionCoefficient::pam(2.0), SpectralMeasure(zero), g, 1.0, 0.05);
  for (double v : b.m0) EXPECT_NEAR(v, 1.0, 1e-13);
  EXPECT_THROW(moment_pde_oracle(DiffusionCoefficient::sine(1.0), gauss, g, 1.0, 0.05), Error);
}

TEST(MomentPde, GrowsWithCoupling) {
  TorusGrid g(3, 8, 8);
  auto a = moment_pde_oracle(DiffusionCoefficient::pam(1.0), gauss, g, 1.0, 0.01);
  EXPECT_GT(a.m0.back(), 1.0);
  for (std::size_t i = 1; i < a.m0.size(); ++i) EXPECT_GE(a.m0[i], a.m0[i - 1]);
}

TEST(Deposit, Measures) {
  TorusGrid g(2, 4.0, 8);
  auto f = deposit_measure(RoughMeasure::dirac({0, 0}, 2.0), g);
  EXPECT_NEAR(f.values[0], 2.0 / g.cell_volume(), 1e-14);
  double mass = 0;
  for (double v : f.values) mass += v * g.cell_volume();
  EXPECT_NEAR(mass, 2.0, 1e-14);
  EXPECT_THROW(deposit_measure(RoughMeasure(GaussianGrowth{}), g), Error);
}
