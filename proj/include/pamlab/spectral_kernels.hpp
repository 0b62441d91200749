#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pamlab/errors.hpp"
#include "pamlab/quadrature.hpp"

namespace pamlab {

struct White {};
struct GaussianSpectral {
  double a = 1.0;
};
// f^(xi) = (1+|xi|^2)^{-s/2}
struct BesselAsCorrelation {
  double s = 4.0;
};
// f^ is the Bessel kernel f_s itself
struct BesselAsSpectral {
  double s = 1.0;
};
struct RieszType {
  double s1 = 2.0;
  double s2 = 2.5;
};
struct Mollified {
  std::function<double(double)> phi_hat;
  double support = 0.0;  // 0: not compactly supported
  std::string name = "mollified";
};
struct CustomRadial {
  std::vector<double> radius;
  std::vector<double> density;
  double tail_exponent = 0.0;  // density ~ r^{-tail_exponent} past the table
};

using SpectralVariant =
    std::variant<White, GaussianSpectral, BesselAsCorrelation, BesselAsSpectral, RieszType, Mollified, CustomRadial>;

class SpectralMeasure {
 public:
  SpectralMeasure() = default;
  template <class V, class = std::enable_if_t<!std::is_same_v<std::decay_t<V>, SpectralMeasure>>>
  SpectralMeasure(V v) : v_(std::move(v)) {
    validate();
  }
  const SpectralVariant& variant() const { return v_; }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(v_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, GaussianSpectral>) {
            if (!(x.a > 0)) fail(Errc::InvalidArgument, "GaussianSpectral needs a > 0");
          } else if constexpr (std::is_same_v<T, BesselAsCorrelation> || std::is_same_v<T, BesselAsSpectral>) {
            if (!(x.s > 0)) fail(Errc::InvalidArgument, "Bessel kernel needs s > 0");
          } else if constexpr (std::is_same_v<T, RieszType>) {
            if (!(x.s1 > 0 && x.s2 > 0)) fail(Errc::InvalidArgument, "RieszType needs s1, s2 > 0");
          } else if constexpr (std::is_same_v<T, Mollified>) {
            if (!x.phi_hat) fail(Errc::InvalidArgument, "Mollified needs phi_hat");
          } else if constexpr (std::is_same_v<T, CustomRadial>) {
            if (x.radius.size() != x.density.size()) fail(Errc::InvalidArgument, "CustomRadial table size mismatch");
            for (std::size_t i = 0; i < x.radius.size(); ++i) {
              if (x.density[i] < 0) fail(Errc::InvalidArgument, "CustomRadial density must be nonnegative");
              if (i && !(x.radius[i] > x.radius[i - 1])) fail(Errc::InvalidArgument, "CustomRadial radii must increase");
            }
          }
        },
        v_);
  }
  SpectralVariant v_ = White{};
};

inline Mollified bump_mollifier(double R) {
  Mollified m;
  m.support = R;
  m.name = "bump:R=" + std::to_string(R);
  m.phi_hat = [R](double r) {
    double q = r / R;
    return q < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - q * q)) : 0.0;
  };
  return m;
}

// Bessel kernel f_s on R^d: Fourier transform inverse of (1+|xi|^2)^{-s/2}.
// Subordination: f_s(r) = Gamma(s/2)^{-1} int e^{-delta} delta^{s/2-1} (4 pi delta)^{-d/2} e^{-r^2/(4 delta)} d delta,
// trapezoid rule in u = log delta.
inline double bessel_kernel(double s, int d, double r) {
  const double nu = 0.5 * (s - d);
  const double rr = r * r;
  if (rr == 0.0 && nu <= 0.0) fail(Errc::DivergentAtZero, "Bessel kernel is infinite at 0 for s <= d");
  double y;
  if (nu >= 0.0)
    y = 0.5 * (nu + std::sqrt(nu * nu + rr));
  else
    y = 0.5 * rr / (std::sqrt(nu * nu + rr) - nu);
  const double u0 = std::log(y);
  auto phi = [&](double u) { return nu * u - std::exp(u) - 0.25 * rr * std::exp(-u); };
  const double pmax = phi(u0);
  const double curv = y + 0.25 * rr / y;
  const double step = std::min(0.25, 0.25 / std::sqrt(curv));
  double acc = 1.0;
  for (int dir = -1; dir <= 1; dir += 2) {
    for (long i = 1; i < 4000000; ++i) {
      double e = phi(u0 + dir * i * step) - pmax;
      acc += std::exp(e);
      if (e < -46.0) break;
    }
  }
  double logc = -0.5 * d * std::log(4.0 * M_PI) - std::lgamma(0.5 * s);
  return std::exp(logc + pmax) * step * acc;
}

namespace detail {

inline double custom_eval(const CustomRadial& c, double r) {
  if (c.radius.empty()) return 0.0;
  if (r <= c.radius.front()) return c.density.front();
  if (r >= c.radius.back()) {
    if (c.tail_exponent <= 0.0 && c.density.back() == 0.0) return 0.0;
    return c.density.back() * std::pow(r / c.radius.back(), -c.tail_exponent);
  }
  auto it = std::upper_bound(c.radius.begin(), c.radius.end(), r);
  std::size_t j = static_cast<std::size_t>(it - c.radius.begin());
  double w = (r - c.radius[j - 1]) / (c.radius[j] - c.radius[j - 1]);
  return (1 - w) * c.density[j - 1] + w * c.density[j];
}

inline void check_dim(int d) {
  if (d < 1) fail(Errc::InvalidDimension, "dimension must be >= 1");
}

}  // namespace detail

inline double f_hat_eval(const SpectralMeasure& m, double r, int d = 3) {
  if (r < 0) fail(Errc::InvalidArgument, "radius must be >= 0");
  detail::check_dim(d);
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, White>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, GaussianSpectral>) {
          return std::exp(-x.a * r * r);
        } else if constexpr (std::is_same_v<T, BesselAsCorrelation>) {
          return std::pow(1.0 + r * r, -0.5 * x.s);
        } else if constexpr (std::is_same_v<T, BesselAsSpectral>) {
          return bessel_kernel(x.s, d, r);
        } else if constexpr (std::is_same_v<T, RieszType>) {
          return std::pow(1.0 + r * r, -0.5 * x.s1) + bessel_kernel(x.s2, d, r);
        } else if constexpr (std::is_same_v<T, Mollified>) {
          double p = x.phi_hat(r);
          return p * p;
        } else {
          return detail::custom_eval(x, r);
        }
      },
      m.variant());
}

// Radii where the density's asymptotic regime starts (toward 0 and toward infinity).
struct ScaleHints {
  double inner = 1.0;
  double outer = 1.0;
};

inline ScaleHints scale_hints(const SpectralMeasure& m) {
  return std::visit(
      [](const auto& x) -> ScaleHints {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, GaussianSpectral>) {
          return {std::min(1.0, 0.5 / std::sqrt(x.a)), std::max(1.0, 4.0 / std::sqrt(x.a))};
        } else if constexpr (std::is_same_v<T, BesselAsSpectral> || std::is_same_v<T, RieszType>) {
          return {0.5, 2.0};
        } else if constexpr (std::is_same_v<T, Mollified>) {
          return {1.0, std::max(1.0, x.support)};
        } else if constexpr (std::is_same_v<T, CustomRadial>) {
          if (x.radius.empty()) return {1.0, 1.0};
          double in = x.radius.front() > 0.0 ? std::min(1.0, x.radius.front()) : 1.0;
          return {in, std::max(1.0, x.radius.back())};
        } else {
          return {1.0, 1.0};
        }
      },
      m.variant());
}

// (2 pi)^{-d} |S^{d-1}| int_0^inf f^(r) r^{d-1} w(r) dr, w supplied by the caller.
template <class W>
RadialIntegral spectral_integral(const SpectralMeasure& m, int d, W w, double outer_onset = 1.0,
                                 bool with_fourier_factor = true, const QuadOptions& opt = {}) {
  detail::check_dim(d);
  ScaleHints sh = scale_hints(m);
  auto f = [&](double r) {
    double v = f_hat_eval(m, r, d);
    if (v == 0.0) return 0.0;
    return v * std::pow(r, d - 1) * w(r);
  };
  RadialIntegral res = integrate_half_line(f, 1.0, sh.inner, std::max(sh.outer, outer_onset), opt);
  double pref = sphere_area(d);
  if (with_fourier_factor) pref *= std::pow(2.0 * M_PI, -d);
  return res.scale(pref);
}

inline RadialIntegral upsilon(const SpectralMeasure& m, int d, double beta, const QuadOptions& opt = {}) {
  detail::check_dim(d);
  if (beta < 0) fail(Errc::InvalidArgument, "beta must be >= 0");
  return spectral_integral(m, d, [beta](double r) { return 1.0 / (beta + r * r); }, 2.0 * std::sqrt(beta), true, opt);
}

inline RadialIntegral upsilon_alpha(const SpectralMeasure& m, int d, double alpha, double beta,
                                    const QuadOptions& opt = {}) {
  detail::check_dim(d);
  if (!(alpha > 0 && alpha < 1)) fail(Errc::InvalidAlpha, "alpha must lie in (0,1)");
  if (beta < 0) fail(Errc::InvalidArgument, "beta must be >= 0");
  return spectral_integral(
      m, d, [beta, alpha](double r) { return std::pow(beta + r * r, alpha - 1.0); }, 2.0 * std::sqrt(beta), true,
      opt);
}

// int f^(xi) / (|xi|^2 ∧ |xi|^{2(1-alpha)}) d xi, no Fourier factor.
inline RadialIntegral spectral_condition(const SpectralMeasure& m, int d, double alpha, const QuadOptions& opt = {}) {
  detail::check_dim(d);
  if (!(alpha > 0 && alpha < 1)) fail(Errc::InvalidAlpha, "alpha must lie in (0,1)");
  return spectral_integral(
      m, d, [alpha](double r) { return r < 1.0 ? 1.0 / (r * r) : std::pow(r, -2.0 * (1.0 - alpha)); }, 1.0, false,
      opt);
}

inline RadialIntegral trace_value(const SpectralMeasure& m, int d, const QuadOptions& opt = {}) {
  return spectral_integral(m, d, [](double) { return 1.0; }, 1.0, true, opt);
}

inline RadialIntegral covariance_k(const SpectralMeasure& m, int d, double t, const QuadOptions& opt = {}) {
  if (t < 0) fail(Errc::NonpositiveTime, "t must be >= 0");
  if (t == 0) return trace_value(m, d, opt);
  return spectral_integral(m, d, [t](double r) { return std::exp(-t * r * r); }, 4.0 / std::sqrt(t), true, opt);
}

inline RadialIntegral covariance_H(const SpectralMeasure& m, int d, double t, const QuadOptions& opt = {}) {
  if (t < 0) fail(Errc::NonpositiveTime, "t must be >= 0");
  if (t == 0) return upsilon(m, d, 0.0, opt);
  return spectral_integral(
      m, d, [t](double r) { return std::exp(-t * r * r) / (r * r); }, 4.0 / std::sqrt(t), true, opt);
}

namespace detail {

// angular average of e^{i z cos} over S^{d-1}
inline double angular_kernel(int d, double z) {
  if (z == 0.0) return 1.0;
  if (d == 1) return std::cos(z);
  if (d == 3) return std::sin(z) / z;
  double nu = 0.5 * d - 1.0;
  return std::tgamma(0.5 * d) * std::pow(2.0 / z, nu) * std::cyl_bessel_j(nu, z);
}

// Repeated averaging of alternating partial sums.
inline double averaged_limit(std::vector<double> s, double& spread) {
  int levels = std::min<int>(static_cast<int>(s.size()) - 2, 12);
  for (int l = 0; l < levels; ++l) {
    std::vector<double> t(s.size() - 1);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) t[i] = 0.5 * (s[i] + s[i + 1]);
    s.swap(t);
  }
  spread = s.size() >= 2 ? std::abs(s[s.size() - 1] - s[s.size() - 2]) : 0.0;
  return s.back();
}

}  // namespace detail

// Real-space correlation f(r) = (2 pi)^{-d} int e^{i x.xi} f^(xi) d xi, |x| = r.
inline double correlation_eval(const SpectralMeasure& m, int d, double r, const QuadOptions& opt = {}) {
  detail::check_dim(d);
  if (m.is<White>()) fail(Errc::NotIntegrable, "white noise correlation is a delta; no pointwise value");
  if (r < 0) fail(Errc::InvalidArgument, "radius must be >= 0");
  if (r == 0.0) {
    RadialIntegral tv = trace_value(m, d, opt);
    if (!tv.finite()) fail(Errc::DivergentAtZero, "correlation is infinite at 0");
    return tv.value;
  }
  if (m.is<BesselAsCorrelation>()) return bessel_kernel(m.as<BesselAsCorrelation>().s, d, r);
  if (m.is<BesselAsSpectral>())
    return std::pow(2.0 * M_PI, -d) * std::pow(1.0 + r * r, -0.5 * m.as<BesselAsSpectral>().s);
  if (m.is<RieszType>()) {
    const auto& z = m.as<RieszType>();
    return bessel_kernel(z.s1, d, r) + std::pow(2.0 * M_PI, -d) * std::pow(1.0 + r * r, -0.5 * z.s2);
  }
  // generic oscillatory radial transform in half-period pieces
  auto g = [&](double rho) {
    double v = f_hat_eval(m, rho, d);
    return v == 0.0 ? 0.0 : v * std::pow(rho, d - 1) * detail::angular_kernel(d, r * rho);
  };
  const double half = M_PI / r;
  ScaleHints sh = scale_hints(m);
  double sum = 0.0, scale = 0.0;
  std::vector<double> partial;
  int quiet = 0;
  const int max_pieces = 20000;
  for (int k = 0; k < max_pieces; ++k) {
    Piece p = gk_integrate(g, k * half, (k + 1) * half, opt);
    sum += p.value;
    scale = std::max(scale, std::abs(sum));
    double hi = (k + 1) * half;
    if (hi < sh.outer) continue;
    partial.push_back(sum);
    quiet = std::abs(p.value) <= std::max(opt.abs_tol * 1e-2, opt.rel_tol * 1e-2 * scale) ? quiet + 1 : 0;
    if (quiet >= 4) {
      partial.clear();
      break;
    }
    if (partial.size() >= 64) {
      double spread = 0.0;
      double lim = detail::averaged_limit(std::vector<double>(partial.end() - 40, partial.end()), spread);
      if (spread <= std::max(opt.abs_tol, opt.rel_tol * std::abs(lim))) {
        sum = lim;
        partial.clear();
        break;
      }
    }
    if (k + 1 == max_pieces) fail(Errc::QuadratureFailure, "oscillatory radial transform did not settle");
  }
  return std::pow(2.0 * M_PI, -d) * sphere_area(d) * sum;
}

struct AlphaCondition {
  double alpha = 0.5;
  RadialIntegral upsilon_alpha1;
  bool strengthened_ok = false;
  RadialIntegral spectral_condition;
};

struct KernelConditionReport {
  int d = 3;
  double L_b = 1.0;
  RadialIntegral upsilon1;
  bool dalang_ok = false;
  RadialIntegral upsilon0;
  bool weak_disorder = false;
  RadialIntegral trace;
  std::vector<AlphaCondition> alpha;
};

inline KernelConditionReport classify_conditions(const SpectralMeasure& m, int d, double L_b,
                                                 const std::vector<double>& alpha_grid, const QuadOptions& opt = {}) {
  if (!(L_b > 0)) fail(Errc::InvalidArgument, "L_b must be > 0");
  KernelConditionReport r;
  r.d = d;
  r.L_b = L_b;
  r.upsilon1 = upsilon(m, d, 1.0, opt);
  r.dalang_ok = r.upsilon1.finite();
  r.upsilon0 = upsilon(m, d, 0.0, opt);
  r.weak_disorder = r.upsilon0.finite() && 4.0 * L_b * L_b * r.upsilon0.value < 1.0;
  r.trace = trace_value(m, d, opt);
  for (double a : alpha_grid) {
    AlphaCondition c;
    c.alpha = a;
    c.upsilon_alpha1 = upsilon_alpha(m, d, a, 1.0, opt);
    c.strengthened_ok = c.upsilon_alpha1.finite();
    c.spectral_condition = spectral_condition(m, d, a, opt);
    r.alpha.push_back(c);
  }
  return r;
}

}  // namespace pamlab
