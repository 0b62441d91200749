#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pamlab/errors.hpp"
#include "pamlab/quadrature.hpp"

namespace pamlab {

using Point = std::vector<double>;

struct Atom {
  Point x;
  double w = 1.0;
};
struct DiracComb {
  std::vector<Atom> atoms;
};
struct Flat {
  double c = 1.0;
};
// |x|^{-alpha} dx
struct PowerLawDensity {
  double alpha = 1.0;
};
// unit atoms on (2 pi Z)^d, |k_i| <= truncation
struct LatticeComb {
  int truncation = 10;
};
// e^{a|x|^2} dx: fails the rough-data integrability; kept only to exercise the check
struct GaussianGrowth {
  double a = 1.0;
};

using MeasurePart = std::variant<DiracComb, Flat, PowerLawDensity, LatticeComb, GaussianGrowth>;

struct MeasureTerm {
  double coef = 1.0;
  MeasurePart part;
};

// Finite signed combination of the primitive initial data above.
class RoughMeasure {
 public:
  RoughMeasure() = default;
  RoughMeasure(MeasurePart p) { terms_.push_back({1.0, std::move(p)}); }

  static RoughMeasure dirac(Point x, double w = 1.0) { return RoughMeasure(DiracComb{{Atom{std::move(x), w}}}); }
  static RoughMeasure flat(double c) { return RoughMeasure(Flat{c}); }
  static RoughMeasure zero() { return {}; }

  const std::vector<MeasureTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  RoughMeasure& operator+=(const RoughMeasure& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  friend RoughMeasure operator+(RoughMeasure a, const RoughMeasure& b) { return a += b; }
  friend RoughMeasure operator*(double c, RoughMeasure a) {
    for (auto& t : a.terms_) t.coef *= c;
    return a;
  }
  friend RoughMeasure operator-(RoughMeasure a, const RoughMeasure& b) { return a += (-1.0) * b; }

 private:
  std::vector<MeasureTerm> terms_;
};

// |mu| taken term by term: an upper bound for the total variation of a signed sum.
inline RoughMeasure abs_measure(const RoughMeasure& mu) {
  RoughMeasure out;
  for (const auto& t : mu.terms()) {
    MeasurePart p = t.part;
    if (auto* dc = std::get_if<DiracComb>(&p))
      for (auto& a : dc->atoms) a.w = std::abs(a.w);
    if (auto* f = std::get_if<Flat>(&p)) f->c = std::abs(f->c);
    RoughMeasure r(p);
    out += std::abs(t.coef) * r;
  }
  return out;
}

inline bool rough_icon_check(const RoughMeasure& mu) {
  for (const auto& t : mu.terms())
    if (std::holds_alternative<GaussianGrowth>(t.part)) return false;
  return true;
}

inline double heat_kernel_r2(int d, double t, double r2) {
  if (!(t > 0)) fail(Errc::NonpositiveTime, "heat kernel needs t > 0");
  return std::pow(2.0 * M_PI * t, -0.5 * d) * std::exp(-r2 / (2.0 * t));
}

inline double heat_kernel(int d, double t, std::span<const double> x) {
  if (static_cast<int>(x.size()) != d) fail(Errc::InvalidDimension, "point dimension mismatch");
  double r2 = 0;
  for (double v : x) r2 += v * v;
  return heat_kernel_r2(d, t, r2);
}

// J_0(t, 0; |x|^{-alpha}) = C_alpha t^{-alpha/2}
inline double c_alpha(int d, double alpha) {
  return std::pow(2.0, -0.5 * alpha) * std::tgamma(0.5 * (d - alpha)) / std::tgamma(0.5 * d);
}

namespace detail {

// e^{-z} int_{S^{d-1}} e^{z cos} d sigma
inline double scaled_sphere_mgf(int d, double z) {
  if (z < 1e-8) return sphere_area(d) * (1.0 - z);
  if (d == 1) return 1.0 + std::exp(-2.0 * z);
  if (d == 3) return 2.0 * M_PI * (-std::expm1(-2.0 * z)) / z;
  const double nu = 0.5 * d - 1.0;
  double iz;
  if (z < 500.0) {
    iz = std::cyl_bessel_i(nu, z) * std::exp(-z);
  } else {
    double m = 4.0 * nu * nu;
    iz = (1.0 - (m - 1) / (8 * z) + (m - 1) * (m - 9) / (2 * std::pow(8 * z, 2))) / std::sqrt(2 * M_PI * z);
  }
  return std::pow(2.0 * M_PI, 0.5 * d) * std::pow(z, -nu) * iz;
}

// (p_t * F(|.|))(x) for a radial nonnegative F, |x| = rho.
template <class F>
double heat_smooth_radial(F&& F_r, int d, double t, double rho, const QuadOptions& opt = {}) {
  const double pref = std::pow(2.0 * M_PI * t, -0.5 * d);
  auto g = [&](double r) {
    double fr = F_r(r);
    if (fr == 0.0) return 0.0;
    double e = (r - rho) * (r - rho) / (2.0 * t);
    if (e > 700) return 0.0;
    return std::pow(r, d - 1) * fr * std::exp(-e) * scaled_sphere_mgf(d, r * rho / t);
  };
  double split = std::max(rho, std::sqrt(t));
  RadialIntegral ri = integrate_half_line(g, split, split, split + 10.0 * std::sqrt(t), opt);
  if (!ri.finite()) return std::numeric_limits<double>::infinity();
  return pref * ri.value;
}

inline double norm2(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s;
}

inline double part_eval(const MeasurePart& p, int d, double t, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiracComb>) {
          double s = 0;
          for (const auto& a : m.atoms) {
            if (static_cast<int>(a.x.size()) != d) fail(Errc::InvalidDimension, "atom dimension mismatch");
            double r2 = 0;
            for (int i = 0; i < d; ++i) r2 += (x[i] - a.x[i]) * (x[i] - a.x[i]);
            s += a.w * heat_kernel_r2(d, t, r2);
          }
          return s;
        } else if constexpr (std::is_same_v<T, Flat>) {
          return m.c;
        } else if constexpr (std::is_same_v<T, PowerLawDensity>) {
          if (!(m.alpha > 0 && m.alpha < d)) fail(Errc::InvalidArgument, "power-law exponent must lie in (0,d)");
          double rho = std::sqrt(norm2(x));
          if (rho == 0.0) return c_alpha(d, m.alpha) * std::pow(t, -0.5 * m.alpha);
          double a = m.alpha;
          return heat_smooth_radial([a](double r) { return std::pow(r, -a); }, d, t, rho);
        } else if constexpr (std::is_same_v<T, LatticeComb>) {
          double prod = 1.0;
          const double p1 = 1.0 / std::sqrt(2.0 * M_PI * t);
          for (int i = 0; i < d; ++i) {
            double s = 0;
            for (int k = -m.truncation; k <= m.truncation; ++k) {
              double y = x[i] - 2.0 * M_PI * k;
              s += p1 * std::exp(-y * y / (2.0 * t));
            }
            prod *= s;
          }
          return prod;
        } else {
          fail(Errc::NotRough, "initial datum grows like a Gaussian; heat flow undefined");
        }
      },
      p);
}

}  // namespace detail

inline double j0_eval(const RoughMeasure& mu, int d, double t, std::span<const double> x) {
  if (!(t > 0)) fail(Errc::NonpositiveTime, "J0 needs t > 0");
  if (static_cast<int>(x.size()) != d) fail(Errc::InvalidDimension, "point dimension mismatch");
  double s = 0;
  for (const auto& term : mu.terms()) s += term.coef * detail::part_eval(term.part, d, t, x);
  return s;
}

inline double j0_eval(const RoughMeasure& mu, int d, double t, std::initializer_list<double> x) {
  std::vector<double> v(x);
  return j0_eval(mu, d, t, std::span<const double>(v));
}

// Large-time limit of J0(t, x; mu), x-independent for every menu part.
inline double j0_limit(const RoughMeasure& mu, int d) {
  double s = 0;
  for (const auto& t : mu.terms()) {
    if (auto* f = std::get_if<Flat>(&t.part)) s += t.coef * f->c;
    if (std::holds_alternative<LatticeComb>(t.part)) s += t.coef * std::pow(2.0 * M_PI, -d);
  }
  return s;
}

// Upper bound on the Gaussian-tail error of the truncated lattice comb at time t.
inline double lattice_truncation_error(const LatticeComb& c, int d, double t) {
  double gap = 2.0 * M_PI * c.truncation - M_PI;  // distance from the cell to the first dropped atom
  double tail = 2.0 * std::erfc(gap / std::sqrt(2.0 * t)) / (2.0 * M_PI);
  return d * tail * std::pow(1.0 / std::sqrt(2.0 * M_PI * t) + 1.0 / (2.0 * M_PI), d - 1);
}

namespace detail {

inline std::vector<Point> sup_candidates(const RoughMeasure& mu, int d, double t) {
  std::vector<Point> c;
  c.push_back(Point(d, 0.0));
  double far = 50.0 + 50.0 * std::sqrt(t);
  bool lattice = false;
  std::vector<double> lo(d, 0.0), hi(d, 0.0);
  std::size_t natoms = 0;
  for (const auto& term : mu.terms()) {
    if (auto* dc = std::get_if<DiracComb>(&term.part)) {
      for (const auto& a : dc->atoms) {
        if (static_cast<int>(a.x.size()) != d) fail(Errc::InvalidDimension, "atom dimension mismatch");
        if (natoms++ < 256) c.push_back(a.x);
        for (int i = 0; i < d; ++i) {
          lo[i] = std::min(lo[i], a.x[i]);
          hi[i] = std::max(hi[i], a.x[i]);
        }
      }
    }
    if (std::holds_alternative<LatticeComb>(term.part)) lattice = true;
  }
  double ext = 0;
  for (int i = 0; i < d; ++i) ext = std::max({ext, std::abs(lo[i]), std::abs(hi[i])});
  Point farp(d, 0.0);
  farp[0] = ext + far;
  c.push_back(farp);
  auto add_box = [&](const std::vector<double>& a, const std::vector<double>& b, int m) {
    if (d > 3) return;
    std::vector<int> idx(d, 0);
    while (true) {
      Point p(d);
      for (int i = 0; i < d; ++i) p[i] = m == 1 ? a[i] : a[i] + (b[i] - a[i]) * idx[i] / (m - 1);
      c.push_back(p);
      int i = 0;
      while (i < d && ++idx[i] == m) idx[i++] = 0;
      if (i == d) break;
    }
  };
  if (lattice) add_box(std::vector<double>(d, -M_PI), std::vector<double>(d, M_PI), 5);
  if (natoms > 1) {
    std::vector<double> a(d), b(d);
    for (int i = 0; i < d; ++i) {
      a[i] = lo[i] - 2 * std::sqrt(t);
      b[i] = hi[i] + 2 * std::sqrt(t);
    }
    add_box(a, b, 7);
  }
  return c;
}

}  // namespace detail

// sup_x |J0(t, x; mu)|
inline double j0_sup(const RoughMeasure& mu, int d, double t) {
  if (!(t > 0)) fail(Errc::NonpositiveTime, "J0 needs t > 0");
  if (mu.empty()) return 0.0;
  if (mu.terms().size() == 1) {
    const auto& term = mu.terms()[0];
    const double k = std::abs(term.coef);
    if (auto* f = std::get_if<Flat>(&term.part)) return k * std::abs(f->c);
    if (auto* dc = std::get_if<DiracComb>(&term.part); dc && dc->atoms.size() == 1)
      return k * std::abs(dc->atoms[0].w) * heat_kernel_r2(d, t, 0.0);
    if (auto* pl = std::get_if<PowerLawDensity>(&term.part))
      return k * c_alpha(d, pl->alpha) * std::pow(t, -0.5 * pl->alpha);
    if (std::holds_alternative<LatticeComb>(term.part)) return k * std::abs(j0_eval(mu, d, t, Point(d, 0.0)));
  }
  auto val = [&](const Point& p) { return std::abs(j0_eval(mu, d, t, std::span<const double>(p))); };
  auto cand = detail::sup_candidates(mu, d, t);
  std::vector<std::pair<double, Point>> scored;
  for (auto& p : cand) scored.emplace_back(val(p), p);
  std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
  double best = scored.front().first;
  std::size_t starts = std::min<std::size_t>(8, scored.size());
  for (std::size_t s = 0; s < starts; ++s) {
    Point p = scored[s].second;
    double v = scored[s].first;
    double step = 0.5 * std::sqrt(t);
    while (step > 1e-7 * std::sqrt(t)) {
      bool moved = false;
      for (int i = 0; i < d && !moved; ++i) {
        for (int sg = -1; sg <= 1; sg += 2) {
          Point q = p;
          q[i] += sg * step;
          double w = val(q);
          if (w > v + 1e-10 * std::max(1.0, v)) {
            p = q;
            v = w;
            moved = true;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    best = std::max(best, v);
  }
  return best;
}

struct CMuResult {
  double C_mu = 0;
  double C_hat_mu = 0;
  std::vector<double> t_grid;
  std::vector<double> sup_values;
};

inline std::vector<double> geometric_grid(double a, double b, int n) {
  std::vector<double> g;
  if (n <= 1 || b <= a) return {a};
  for (int i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
  g.back() = b;
  return g;
}

inline CMuResult c_mu(const RoughMeasure& mu, int d, double t_max = 1e3, int points = 64) {
  if (!(t_max >= 1)) fail(Errc::InvalidArgument, "t_max must be >= 1");
  RoughMeasure a = abs_measure(mu);
  CMuResult r;
  r.t_grid = geometric_grid(1.0, t_max, points);
  for (double t : r.t_grid) {
    double s = j0_sup(a, d, t);
    r.sup_values.push_back(s);
    r.C_hat_mu = std::max(r.C_hat_mu, s);
  }
  r.C_mu = r.sup_values.front();
  return r;
}

inline std::vector<double> perturbation_decay(const RoughMeasure& mu, int d, const std::vector<double>& t_list) {
  std::vector<double> out;
  double prev = 0;
  for (double t : t_list) {
    if (!(t > 0) || (!out.empty() && !(t > prev))) fail(Errc::InvalidArgument, "t_list must be positive and increasing");
    out.push_back(j0_sup(mu, d, t));
    prev = t;
  }
  return out;
}

enum class ThetaMode { Difference, Tilde };

// Theta(tau) = sup_{s,r >= tau} sup_x |J0(s+1,x) - J0(r+1,x)|^2 on a finite s-grid plus the t -> inf limit;
// Tilde: sup_{s >= tau} sup_x J0(s+1,x)^2.
inline double theta(const RoughMeasure& mu, int d, double tau, double t_max = 1e3, ThetaMode mode = ThetaMode::Difference,
                    int points = 48) {
  if (tau < 0) fail(Errc::InvalidArgument, "tau must be >= 0");
  if (mu.empty()) return 0.0;
  double top = std::max(t_max, tau + 1.0);
  auto s_grid = geometric_grid(tau + 1.0, top + 1.0, points);
  if (mode == ThetaMode::Tilde) {
    double m = 0;
    for (double s : s_grid) m = std::max(m, j0_sup(mu, d, s));
    return m * m;
  }
  const double lim = j0_limit(mu, d);
  auto xs = detail::sup_candidates(mu, d, tau + 1.0);
  // radial probes along the first axis
  for (double r : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    Point p(d, 0.0);
    p[0] = r * std::sqrt(tau + 1.0);
    xs.push_back(p);
  }
  double best = 0;
  for (const auto& x : xs) {
    double lo = lim, hi = lim;
    for (double s : s_grid) {
      double v = j0_eval(mu, d, s, std::span<const double>(x));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    best = std::max(best, hi - lo);
  }
  return best * best;
}

struct ExpDecay {
  double a = 1.0;
};
struct PolyDecay {
  double a = 4.0;
};
struct CustomGrid {
  std::vector<double> radius;
  std::vector<double> value;
};

class WeightFunction {
 public:
  using Variant = std::variant<ExpDecay, PolyDecay, CustomGrid>;
  WeightFunction(ExpDecay w = {}) : v_(w) {}
  WeightFunction(PolyDecay w) : v_(w) {}
  WeightFunction(CustomGrid w) : v_(std::move(w)) {}
  const Variant& variant() const { return v_; }

  double operator()(double r) const {
    return std::visit(
        [r](const auto& w) -> double {
          using T = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<T, ExpDecay>) {
            return std::exp(-w.a * r);
          } else if constexpr (std::is_same_v<T, PolyDecay>) {
            return 1.0 / (1.0 + std::pow(r, w.a));
          } else {
            if (w.radius.empty()) return 0.0;
            if (r <= w.radius.front()) return w.value.front();
            if (r >= w.radius.back()) return w.value.back();
            auto it = std::upper_bound(w.radius.begin(), w.radius.end(), r);
            std::size_t j = static_cast<std::size_t>(it - w.radius.begin());
            double q = (r - w.radius[j - 1]) / (w.radius[j] - w.radius[j - 1]);
            return (1 - q) * w.value[j - 1] + q * w.value[j];
          }
        },
        v_);
  }
  double operator()(std::span<const double> x) const { return (*this)(std::sqrt(detail::norm2(x))); }

  // radius beyond which the weight is in its tail regime
  double scale() const {
    if (auto* e = std::get_if<ExpDecay>(&v_)) return 1.0 / e->a;
    if (auto* c = std::get_if<CustomGrid>(&v_); c && !c->radius.empty()) return std::max(1.0, c->radius.back());
    return 1.0;
  }

 private:
  Variant v_;
};

namespace detail {

inline bool radial_about_origin(const RoughMeasure& mu) {
  for (const auto& t : mu.terms()) {
    if (std::holds_alternative<Flat>(t.part) || std::holds_alternative<PowerLawDensity>(t.part)) continue;
    if (auto* dc = std::get_if<DiracComb>(&t.part)) {
      for (const auto& a : dc->atoms)
        for (double v : a.x)
          if (v != 0.0) return false;
      continue;
    }
    return false;
  }
  return true;
}

}  // namespace detail

// G_rho(t; mu) = int J0(t,x;mu)^2 rho(x) dx
inline double g_rho(const RoughMeasure& mu, const WeightFunction& rho, int d, double t, int max_grid = 256) {
  if (!(t > 0)) fail(Errc::NonpositiveTime, "g_rho needs t > 0");
  if (mu.empty()) return 0.0;
  if (detail::radial_about_origin(mu)) {
    auto f = [&](double r) {
      Point x(d, 0.0);
      x[0] = r;
      double j = j0_eval(mu, d, t, std::span<const double>(x));
      return std::pow(r, d - 1) * j * j * rho(r);
    };
    double s = std::max(std::sqrt(t), rho.scale());
    RadialIntegral ri = integrate_half_line(f, s, s, 4.0 * s);
    if (!ri.finite()) return std::numeric_limits<double>::infinity();
    return sphere_area(d) * ri.value;
  }
  // Dirac atoms and constants: Gaussian product rule, p_t(x-a) p_t(x-b) = p_{2t}(a-b) p_{t/2}(x-(a+b)/2)
  bool pairwise = true;
  double c = 0;
  std::vector<Atom> atoms;
  for (const auto& term : mu.terms()) {
    if (auto* f = std::get_if<Flat>(&term.part)) {
      c += term.coef * f->c;
    } else if (auto* dc = std::get_if<DiracComb>(&term.part)) {
      for (const auto& a : dc->atoms) atoms.push_back({a.x, term.coef * a.w});
    } else {
      pairwise = false;
    }
  }
  if (pairwise) {
    auto smooth = [&](double tt, const Point& y) {
      return detail::heat_smooth_radial([&](double r) { return rho(r); }, d, tt, std::sqrt(detail::norm2(y)));
    };
    double total = 0;
    if (c != 0.0) total += c * c * sphere_area(d) * integrate_half_line([&](double r) { return std::pow(r, d - 1) * rho(r); }, rho.scale(), rho.scale(), 4.0 * rho.scale()).value;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (c != 0.0) total += 2.0 * c * atoms[i].w * smooth(t, atoms[i].x);
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        double r2 = 0;
        Point m(d);
        for (int k = 0; k < d; ++k) {
          r2 += (atoms[i].x[k] - atoms[j].x[k]) * (atoms[i].x[k] - atoms[j].x[k]);
          m[k] = 0.5 * (atoms[i].x[k] + atoms[j].x[k]);
        }
        total += atoms[i].w * atoms[j].w * heat_kernel_r2(d, 2.0 * t, r2) * smooth(0.5 * t, m);
      }
    }
    return total;
  }
  if (d > 3) fail(Errc::QuadratureFailure, "grid quadrature limited to d <= 3");
  // Cartesian midpoint rule on a box; refine until two levels agree
  double ext = 0;
  for (const auto& term : mu.terms())
    if (auto* dc = std::get_if<DiracComb>(&term.part))
      for (const auto& a : dc->atoms)
        for (double v : a.x) ext = std::max(ext, std::abs(v));
  double R = ext + 8.0 * std::sqrt(t) + 25.0 * rho.scale();
  double prev = -1;
  for (int n = 32; n <= max_grid; n *= 2) {
    double h = 2 * R / n;
    std::vector<int> idx(d, 0);
    double sum = 0, comp = 0;
    Point x(d);
    while (true) {
      for (int i = 0; i < d; ++i) x[i] = -R + (idx[i] + 0.5) * h;
      double j = j0_eval(mu, d, t, std::span<const double>(x));
      double v = j * j * rho(std::span<const double>(x));
      double tt = sum + v;
      comp += std::abs(sum) >= std::abs(v) ? (sum - tt) + v : (v - tt) + sum;
      sum = tt;
      int i = 0;
      while (i < d && ++idx[i] == n) idx[i++] = 0;
      if (i == d) break;
    }
    double val = (sum + comp) * std::pow(h, d);
    if (prev >= 0 && std::abs(val - prev) <= 1e-6 * std::abs(val)) return val;
    prev = val;
  }
  fail(Errc::QuadratureFailure, "grid quadrature for G_rho did not converge");
}

struct AdmissibilityReport {
  double c_rho = 0;          // max ratio on the base grid
  double c_rho_refined = 0;  // max ratio on the doubled grid
  bool violation = false;
  std::string reason;
};

struct AdmissibilityGrid {
  double radius = 10.0;
  int radial_points = 32;
  int time_points = 8;
};

inline AdmissibilityReport weight_admissible_check(const WeightFunction& rho, int d, double T,
                                                   AdmissibilityGrid grid = {}) {
  if (!(T > 0)) fail(Errc::NonpositiveTime, "T must be > 0");
  auto times = geometric_grid(T / 64.0, T, grid.time_points);
  auto max_ratio = [&](double R, int n, std::string& why) {
    double m = 0;
    for (int i = 0; i <= n; ++i) {
      double r = R * i / n;
      double den = rho(r);
      for (double t : times) {
        double num = detail::heat_smooth_radial([&](double y) { return rho(y); }, d, t, r);
        if (den <= 0.0) {
          if (num > 0.0) {
            why = "weight vanishes at r=" + std::to_string(r) + " while its heat flow does not";
            return std::numeric_limits<double>::infinity();
          }
          continue;
        }
        m = std::max(m, num / den);
      }
    }
    return m;
  };
  AdmissibilityReport rep;
  std::string why;
  rep.c_rho = max_ratio(grid.radius, grid.radial_points, why);
  rep.c_rho_refined = max_ratio(2.0 * grid.radius, 2 * grid.radial_points, why);
  if (!std::isfinite(rep.c_rho) || !std::isfinite(rep.c_rho_refined)) {
    rep.violation = true;
    rep.reason = why;
  } else if (rep.c_rho_refined > 2.0 * rep.c_rho) {
    rep.violation = true;
    rep.reason = "ratio keeps growing under grid doubling";
  }
  return rep;
}

inline RadialIntegral weight_ratio_integrable(const WeightFunction& rho, const WeightFunction& rho_tilde, int d) {
  bool bad = false;
  auto f = [&](double r) {
    double a = rho(r), b = rho_tilde(r);
    if (a == 0.0) return 0.0;
    if (b <= 0.0) {
      bad = true;
      return 0.0;
    }
    return std::pow(r, d - 1) * a / b;
  };
  double s = std::max(rho.scale(), rho_tilde.scale());
  RadialIntegral ri = integrate_half_line(f, s, s, 4.0 * s);
  if (bad) {
    ri.outer_divergent = true;
    ri.value = std::numeric_limits<double>::infinity();
  }
  return ri.scale(sphere_area(d));
}

}  // namespace pamlab
