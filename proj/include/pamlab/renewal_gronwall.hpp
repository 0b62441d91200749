#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "pamlab/errors.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/quadrature.hpp"
#include "pamlab/spectral_kernels.hpp"

namespace pamlab {

// Nonnegative, nonincreasing g on [0, inf) with g(0) finite.
struct DecayFunction {
  std::function<double(double)> eval;
  std::string name;

  double operator()(double t) const { return eval(t); }
  double at0() const { return eval(0.0); }

  // grid spot check; throws for entries that are not monotone
  void validate(double t_max = 100.0, int points = 400) const {
    double prev = eval(0.0);
    if (!std::isfinite(prev) || prev < 0) fail(Errc::InvalidArgument, name + ": g(0) must be finite and >= 0");
    for (int i = 1; i <= points; ++i) {
      double t = t_max * std::pow(static_cast<double>(i) / points, 2.0);
      double v = eval(t);
      if (!(v >= 0) || v > prev * (1 + 1e-12) + 1e-300)
        fail(Errc::InvalidArgument, name + ": g must be nonnegative and nonincreasing");
      prev = v;
    }
  }
};

// k on (0, inf), integrable; h(t) = int_t^inf k, optionally in closed form.
struct KernelFunction {
  std::function<double(double)> eval;
  std::function<double(double)> tail;  // may be empty
  double singularity = 0.0;            // k(s) ~ s^{-singularity} as s -> 0
  std::string name;

  double operator()(double s) const { return eval(s); }
};

inline DecayFunction exp_decay(double a = 1.0) {
  return {[a](double t) { return std::exp(-a * t); }, "exp(" + std::to_string(a) + ")"};
}
inline DecayFunction power_decay(double p) {
  return {[p](double t) { return std::pow(1.0 + t, -p); }, "power(" + std::to_string(p) + ")"};
}
inline DecayFunction zero_decay() {
  return {[](double) { return 0.0; }, "zero"};
}

inline KernelFunction exp_kernel(double a = 1.0) {
  return {[a](double s) { return std::exp(-a * s); }, [a](double t) { return std::exp(-a * t) / a; }, 0.0,
          "exp(" + std::to_string(a) + ")"};
}
// (1+s)^{-p}, p > 1
inline KernelFunction power_kernel(double p) {
  if (!(p > 1)) fail(Errc::NotIntegrable, "power kernel needs p > 1");
  return {[p](double s) { return std::pow(1.0 + s, -p); },
          [p](double t) { return std::pow(1.0 + t, 1.0 - p) / (p - 1.0); }, 0.0, "power(" + std::to_string(p) + ")"};
}
// s^{-a} e^{-s}, 0 <= a < 1
inline KernelFunction singular_kernel(double a) {
  if (!(a >= 0 && a < 1)) fail(Errc::NotIntegrable, "singular kernel needs exponent in [0,1)");
  return {[a](double s) { return std::pow(s, -a) * std::exp(-s); },
          [a](double t) { return boost::math::tgamma(1.0 - a, t); }, a, "singular(" + std::to_string(a) + ")"};
}

namespace detail {

// Cubic B-spline of F on x = log(1+t) over [0, t_max], power-law continuation beyond.
class LogSpline {
 public:
  template <class F>
  LogSpline(F&& f, double t_max, int points) : x_max_(std::log1p(t_max)) {
    std::vector<double> y(points);
    step_ = x_max_ / (points - 1);
    for (int i = 0; i < points; ++i) y[i] = std::log(f(std::expm1(i * step_)));
    slope_ = (y[points - 1] - y[points - 2]) / step_;
    last_ = y.back();
    spline_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(y.begin(), y.end(), 0.0,
                                                                                           step_);
  }
  double operator()(double t) const {
    double x = std::log1p(t);
    if (x >= x_max_) return std::exp(last_ + slope_ * (x - x_max_));
    return std::exp((*spline_)(x));
  }

 private:
  double x_max_, step_ = 0, slope_ = 0, last_ = 0;
  std::shared_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

}  // namespace detail

// (H, k) of a spectral measure as a (g, k) pair, tabulated once.
inline DecayFunction spectral_H_decay(const SpectralMeasure& m, int d, double t_max = 1e3, int points = 400) {
  auto sp = detail::LogSpline([&](double t) { return covariance_H(m, d, t).value; }, t_max, points);
  double h0 = upsilon(m, d, 0.0).value;
  if (!std::isfinite(h0)) fail(Errc::NotIntegrable, "H(0) is infinite for this kernel");
  return {[sp, h0](double t) { return t == 0.0 ? h0 : sp(t); }, "H"};
}
inline KernelFunction spectral_k_kernel(const SpectralMeasure& m, int d, double t_max = 1e3, int points = 400) {
  auto sk = detail::LogSpline([&](double t) { return covariance_k(m, d, t).value; }, t_max, points);
  auto sh = spectral_H_decay(m, d, t_max, points);
  return {[sk](double s) { return sk(s); }, sh.eval, 0.0, "k"};
}

// h(t) = int_t^inf k(s) ds.
inline double h_from_k(const KernelFunction& k, double t, const QuadOptions& opt = {}) {
  if (t < 0) fail(Errc::InvalidArgument, "t must be >= 0");
  if (k.tail) return k.tail(t);
  double lead = 0;
  double start = t;
  if (t == 0.0) {
    // near-zero piece, tolerant of an integrable singularity
    auto p = gk_integrate([&](double s) { return k(s); }, 0.0, 1.0, opt);
    if (!std::isfinite(p.value)) fail(Errc::NotIntegrable, "kernel is not integrable at 0");
    lead = p.value;
    start = 1.0;
  }
  auto r = integrate_half_line([&](double s) { return k(start + s); }, 1.0, 1.0, 1.0, opt);
  if (!r.outer_divergent && !r.inner_divergent) return lead + r.value;
  fail(Errc::NotIntegrable, "kernel is not integrable at infinity");
}

inline DecayFunction h_decay(const KernelFunction& k) {
  return {[k](double t) { return h_from_k(k, t); }, "h[" + k.name + "]"};
}

struct InequalityCheck {
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

namespace detail {

inline QuadOptions nested_opts() {
  QuadOptions o;
  o.abs_tol = 1e-10;
  o.rel_tol = 1e-10;
  o.max_depth = 12;
  return o;
}

}  // namespace detail

// int_0^t g((t-s)/2^n) k(s) ds  <=  g(0) h(t/2^{n+1}) + h(0) g(t/2^{n+1})
inline InequalityCheck check_part_i(const DecayFunction& g, const KernelFunction& k, int n, double t) {
  if (n < 0 || t < 0) fail(Errc::InvalidArgument, "need n >= 0 and t >= 0");
  const double sc = std::ldexp(1.0, -n);
  InequalityCheck c;
  c.lhs = gk_integrate([&](double s) { return g((t - s) * sc) * k(s); }, 0.0, t, detail::nested_opts()).value;
  const double half = t * std::ldexp(1.0, -(n + 1));
  c.rhs = g.at0() * h_from_k(k, half) + h_from_k(k, 0.0) * g(half);
  c.pass = c.lhs <= c.rhs + 1e-9;
  return c;
}

namespace detail {

// (k^{*n} * g)(t) by iterated quadrature over the ordered simplex.
inline double simplex_integral(const DecayFunction& g, const KernelFunction& k, int n, double t) {
  if (n == 0) return g(t);
  if (t <= 0) return 0.0;
  return gk_integrate([&](double u) { return k(u) * simplex_integral(g, k, n - 1, t - u); }, 0.0, t, nested_opts())
      .value;
}

}  // namespace detail

inline InequalityCheck check_part_ii(const DecayFunction& g, const KernelFunction& k, int n, double t) {
  if (n > 3) fail(Errc::BudgetExceeded, "nested quadrature is limited to n <= 3");
  if (n < 1 || t < 0) fail(Errc::InvalidArgument, "need 1 <= n <= 3 and t >= 0");
  InequalityCheck c;
  c.lhs = detail::simplex_integral(g, k, n, t);
  const double h0 = h_from_k(k, 0.0), q = t * std::ldexp(1.0, -n);
  c.rhs = (std::ldexp(1.0, n) - 1.0) * g.at0() * std::pow(h0, n - 1) * h_from_k(k, q) + std::pow(h0, n) * g(q);
  c.pass = c.lhs <= c.rhs + 1e-8;
  return c;
}

struct VolterraSolution {
  double dt = 0;
  std::vector<double> t;
  std::vector<double> f;
  double at(double time) const {
    double x = time / dt;
    std::size_t i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= f.size()) return f.back();
    double w = x - i;
    return (1 - w) * f[i] + w * f[i + 1];
  }
};

// f = g + beta (k * f) on [0, T]. Product integration: on each cell the kernel
// is integrated exactly (by quadrature) against the linear interpolant of f.
inline VolterraSolution volterra_iterate(const DecayFunction& g, const KernelFunction& k, double beta, double T,
                                         double dt) {
  if (beta < 0) fail(Errc::InvalidArgument, "beta must be >= 0");
  if (!(dt > 0) || !(T > 0)) fail(Errc::InvalidArgument, "dt and T must be positive");
  const std::size_t N = static_cast<std::size_t>(std::llround(T / dt));
  QuadOptions o;
  o.abs_tol = 1e-14;
  o.rel_tol = 1e-12;
  // a[m] = int_cell k (1-theta), b[m] = int_cell k theta on [m dt, (m+1) dt]
  std::vector<double> a(N), b(N);
  for (std::size_t m = 0; m < N; ++m) {
    const double s0 = m * dt;
    a[m] = gk_integrate([&](double s) { return k(s) * (1.0 - (s - s0) / dt); }, s0, s0 + dt, o).value;
    b[m] = gk_integrate([&](double s) { return k(s) * ((s - s0) / dt); }, s0, s0 + dt, o).value;
  }
  // weight of f_{i-m}: a[m] + b[m-1]
  std::vector<double> w(N + 1, 0.0);
  for (std::size_t m = 0; m <= N; ++m) w[m] = (m < N ? a[m] : 0.0) + (m ? b[m - 1] : 0.0);
  VolterraSolution out;
  out.dt = dt;
  out.t.resize(N + 1);
  out.f.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    out.t[i] = i * dt;
    double acc = g(out.t[i]);
    if (i > 0) {
      CompensatedSum s;
      for (std::size_t m = 1; m < i; ++m) s.add(w[m] * out.f[i - m]);
      s.add(b[i - 1] * out.f[0]);  // last cell: only its theta-part lands on f_0
      acc += beta * s.value();
      out.f[i] = acc / (1.0 - beta * a[0]);
    } else {
      out.f[i] = acc;
    }
  }
  return out;
}

struct SeriesBound {
  double value = 0;
  double partial = 0;
  double tail = 0;
  int terms = 0;
};

// g(t) + max{1, g(0), h(0)} sum_{n>=1} 2 beta (2 beta h(0))^{n-1} (h(t/2^n) + g(t/2^n)),
// truncated once a term falls below tol, plus a geometric bound on the remainder.
inline SeriesBound series_bound(const DecayFunction& g, const KernelFunction& k, double beta, double t,
                                double tol = 1e-12) {
  if (beta < 0) fail(Errc::InvalidArgument, "beta must be >= 0");
  const double h0 = h_from_k(k, 0.0), g0 = g.at0();
  const double q = 2.0 * beta * h0;
  if (q >= 1.0 - 1e-12) fail(Errc::ThresholdViolated, "2 beta h(0) must be < 1");
  SeriesBound r;
  const double pre = std::max({1.0, g0, h0});
  r.partial = g(t);
  if (beta == 0) {
    r.value = r.partial;
    return r;
  }
  double qn = 1.0;  // q^{n-1}
  for (int n = 1; n < 2000; ++n) {
    const double tn = t * std::ldexp(1.0, -n);
    double term = pre * 2.0 * beta * qn * (h_from_k(k, tn) + g(tn));
    r.partial += term;
    r.terms = n;
    qn *= q;
    if (term < tol) break;
  }
  // remaining terms are at most pre 2 beta q^{n-1} (h0 + g0)
  r.tail = pre * 2.0 * beta * qn * (h0 + g0) / (1.0 - q);
  r.value = r.partial + r.tail;
  return r;
}

}  // namespace pamlab
