#include <gtest/gtest.h>

#include <cmath>

#include "pamlab/renewal_gronwall.hpp"

using namespace pamlab;

TEST(HFromK, ClosedForms) {
  EXPECT_NEAR(h_from_k(exp_kernel(), 0.0), 1.0, 1e-14);
  EXPECT_NEAR(h_from_k(exp_kernel(), 2.0), std::exp(-2.0), 1e-14);
  EXPECT_NEAR(h_from_k(power_kernel(2.0), 1.0), 0.5, 1e-14);
}

TEST(HFromK, QuadratureWithoutTail) {
  KernelFunction k = exp_kernel();
  k.tail = nullptr;
  EXPECT_NEAR(h_from_k(k, 0.0), 1.0, 1e-9);
  EXPECT_NEAR(h_from_k(k, 2.0), std::exp(-2.0), 1e-9);
  KernelFunction p = power_kernel(2.0);
  p.tail = nullptr;
  EXPECT_NEAR(h_from_k(p, 1.0), 0.5, 1e-8);
}

TEST(HFromK, NotIntegrable) { EXPECT_THROW(power_kernel(1.0), Error); }

TEST(PartI, Examples) {
  auto c = check_part_i(exp_decay(), exp_kernel(), 0, 2.0);
  EXPECT_NEAR(c.lhs, 2 * std::exp(-2.0), 1e-12);
  EXPECT_NEAR(c.rhs, 2 * std::exp(-1.0), 1e-12);
  EXPECT_TRUE(c.pass);
  auto z = check_part_i(exp_decay(), exp_kernel(), 3, 0.0);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_TRUE(z.pass);
  auto g0 = check_part_i(zero_decay(), exp_kernel(), 2, 3.0);
  EXPECT_EQ(g0.lhs, 0.0);
  EXPECT_TRUE(g0.pass);
}

TEST(PartII, Examples) {
  auto a = check_part_ii(exp_decay(), exp_kernel(), 1, 2.0);
  auto b = check_part_i(exp_decay(), exp_kernel(), 0, 2.0);
  EXPECT_NEAR(a.lhs, b.lhs, 1e-12);
  EXPECT_NEAR(a.rhs, h_from_k(exp_kernel(), 1.0) + std::exp(-1.0), 1e-12);
  auto c = check_part_ii(exp_decay(), exp_kernel(), 2, 2.0);
  EXPECT_NEAR(c.lhs, 2 * std::exp(-2.0), 1e-10);
  EXPECT_NEAR(c.rhs, 4 * std::exp(-0.5), 1e-12);
  EXPECT_TRUE(c.pass);
  auto d = check_part_ii(exp_decay(), exp_kernel(), 3, 5.0);
  EXPECT_NEAR(d.lhs, 125.0 / 6 * std::exp(-5.0), 1e-9);
  EXPECT_EQ(check_part_ii(zero_decay(), exp_kernel(), 3, 1.0).lhs, 0.0);
}

TEST(PartII, BudgetExceeded) {
  try {
    check_part_ii(exp_decay(), exp_kernel(), 4, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BudgetExceeded);
  }
}

TEST(Menu, AllPairsPassGrid) {
  std::vector<std::pair<DecayFunction, KernelFunction>> pairs{{exp_decay(), exp_kernel()},
                                                              {power_decay(2), power_kernel(2)},
                                                              {exp_decay(), singular_kernel(0.5)}};
  for (auto& [g, k] : pairs)
    for (int n = 0; n <= 6; ++n)
      for (double t : {0.1, 1.0, 10.0}) EXPECT_TRUE(check_part_i(g, k, n, t).pass) << g.name << k.name << n << " " << t;
}

TEST(Volterra, BetaZeroIsG) {
  auto s = volterra_iterate(exp_decay(), exp_kernel(), 0.0, 5.0, 0.1);
  for (std::size_t i = 0; i < s.f.size(); ++i) EXPECT_NEAR(s.f[i], std::exp(-s.t[i]), 1e-15);
}

TEST(Volterra, ExponentialPair) {
  // f = e^{-t} + 0.4 e^{-.} * f has f(t) = e^{-0.6 t}
  auto a = volterra_iterate(exp_decay(), exp_kernel(), 0.4, 40.0, 0.01);
  auto b = volterra_iterate(exp_decay(), exp_kernel(), 0.4, 40.0, 0.005);
  double rich = 0, exact = 0;
  for (std::size_t i = 0; i < a.f.size(); ++i) {
    rich = std::max(rich, std::abs(a.f[i] - b.f[2 * i]));
    exact = std::max(exact, std::abs(a.f[i] - std::exp(-0.6 * a.t[i])));
  }
  EXPECT_LT(rich, 1e-6);
  EXPECT_LT(exact, 1e-5);
  EXPECT_LT(a.f.back(), 1e-3);
}

TEST(Series, Examples) {
  EXPECT_NEAR(series_bound(exp_decay(), exp_kernel(), 0.4, 0.0).value, 9.0, 1e-9);
  EXPECT_DOUBLE_EQ(series_bound(exp_decay(), exp_kernel(), 0.0, 1.5).value, std::exp(-1.5));
  try {
    series_bound(exp_decay(), exp_kernel(), 0.5, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ThresholdViolated);
  }
}

TEST(Series, DominatesVolterra) {
  std::vector<std::pair<DecayFunction, KernelFunction>> pairs{{exp_decay(), exp_kernel()},
                                                              {power_decay(2), power_kernel(2)}};
  for (auto& [g, k] : pairs) {
    auto f = volterra_iterate(g, k, 0.4, 20.0, 0.01);
    for (double t = 0; t <= 20; t += 0.5) EXPECT_GE(series_bound(g, k, 0.4, t).value, f.at(t)) << k.name << t;
  }
}

TEST(Spectral, GaussianHAndK) {
  SpectralMeasure m(GaussianSpectral{1.0});
  auto H = spectral_H_decay(m, 3);
  auto k = spectral_k_kernel(m, 3);
  const double p = std::pow(M_PI, 1.5);
  EXPECT_NEAR(H(3.0) * 8 * p, 1.0, 1e-4);
  EXPECT_NEAR(k(3.0) * 64 * p, 1.0, 1e-4);
  EXPECT_NEAR(h_from_k(k, 3.0) * 8 * p, 1.0, 1e-4);
}
