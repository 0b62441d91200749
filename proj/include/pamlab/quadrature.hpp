#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pamlab/errors.hpp"

namespace pamlab {

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  unsigned max_depth = 14;  // at most 2^max_depth subintervals per call
  // divergence: this many consecutive octaves whose piece ratio stays >= decay_ratio
  int divergence_octaves = 8;
  double decay_ratio = 0.99;
  int max_octaves = 400;
};

struct Piece {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk_rule(F& f, double a, double b) {
  // fixed 31-point Kronrod rule; Boost returns the error in [-1,1] units, so rescale
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto g = [&](double x) { return f(mid + half * x); };
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, -1.0, 1.0, 0, 0.0, &err);
  return {a, b, half * v, half * err};
}

}  // namespace detail

// Globally adaptive bisection driven by the Gauss-Kronrod 15/31 pair.
template <class F>
Piece gk_integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  if (!(b > a)) return {};
  std::priority_queue<detail::Segment> heap;
  detail::Segment s0 = detail::gk_rule(f, a, b);
  double total = s0.value, err = s0.error;
  heap.push(s0);
  const std::size_t max_segments = std::size_t(1) << std::min(opt.max_depth, 20u);
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && heap.size() < max_segments) {
    if (std::isnan(total) || std::isinf(total)) break;
    detail::Segment w = heap.top();
    heap.pop();
    double m = 0.5 * (w.a + w.b);
    if (!(m > w.a && m < w.b)) {
      heap.push(w);
      break;
    }
    detail::Segment l = detail::gk_rule(f, w.a, m), r = detail::gk_rule(f, m, w.b);
    total += l.value + r.value - w.value;
    err += l.error + r.error - w.error;
    heap.push(l);
    heap.push(r);
  }
  if (std::isnan(total)) fail(Errc::QuadratureFailure, "NaN integrand on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  if (std::isinf(total)) return {total, 0.0};
  // recompute from the leaves to shed accumulated cancellation
  double v = 0, e = 0;
  while (!heap.empty()) {
    v += heap.top().value;
    e += heap.top().error;
    heap.pop();
  }
  if (e > 1e3 * std::max(opt.abs_tol, opt.rel_tol * std::abs(v)))
    fail(Errc::QuadratureFailure, "adaptive refinement budget exceeded on [" + std::to_string(a) + ", " +
                                      std::to_string(b) + "], error " + std::to_string(e));
  return {v, e};
}

// Result of an integral over (0, inf) split at `split`; a divergent side holds +inf.
struct RadialIntegral {
  double value = 0.0;
  double inner = 0.0;
  double outer = 0.0;
  bool inner_divergent = false;
  bool outer_divergent = false;
  double error = 0.0;
  int octaves = 0;

  bool finite() const { return !inner_divergent && !outer_divergent; }
  RadialIntegral& scale(double c) {
    if (!inner_divergent) inner *= c;
    if (!outer_divergent) outer *= c;
    value = finite() ? value * c : std::numeric_limits<double>::infinity();
    error *= std::abs(c);
    return *this;
  }
};

namespace detail {

struct OctaveSum {
  double sum = 0.0;
  double error = 0.0;
  bool divergent = false;
  int octaves = 0;
};

// Walks octaves away from `start` (outward if dir=+1, toward 0 if dir=-1).
// Integrand must be nonnegative. `onset` is the radius beyond which (dir=+1) or
// below which (dir=-1) the asymptotic regime can be trusted for divergence calls.
template <class F>
OctaveSum walk_octaves(F& f, double start, int dir, double onset, const QuadOptions& opt) {
  OctaveSum out;
  double prev = -1.0;
  int stuck = 0;
  int zeros = 0;
  double comp = 0.0;
  double a = start;
  for (int k = 0; k < opt.max_octaves; ++k) {
    double b = dir > 0 ? 2.0 * a : 0.5 * a;
    Piece p = dir > 0 ? gk_integrate(f, a, b, opt) : gk_integrate(f, b, a, opt);
    ++out.octaves;
    if (std::isinf(p.value)) {
      out.divergent = true;
      out.sum = std::numeric_limits<double>::infinity();
      return out;
    }
    // Neumaier
    double t = out.sum + p.value;
    comp += std::abs(out.sum) >= std::abs(p.value) ? (out.sum - t) + p.value : (p.value - t) + out.sum;
    out.sum = t;
    out.error += p.error;
    const double tiny = 1e-3 * opt.abs_tol;
    bool trusted = dir > 0 ? a >= onset : a <= onset;
    if (p.value <= tiny) {
      ++zeros;
      if (zeros >= 3 && trusted) break;
      prev = p.value;
      a = b;
      stuck = 0;
      continue;
    }
    zeros = 0;
    if (prev > 0.0) {
      double rho = p.value / prev;
      if (rho >= opt.decay_ratio) {
        if (trusted && ++stuck >= opt.divergence_octaves) {
          out.divergent = true;
          out.sum = std::numeric_limits<double>::infinity();
          return out;
        }
      } else {
        stuck = 0;
        double tail = p.value * rho / (1.0 - rho);
        if (trusted && (tail <= std::max(0.1 * opt.abs_tol, opt.rel_tol * 0.1 * std::abs(out.sum + comp)) ||
                        k + 1 == opt.max_octaves)) {
          out.sum += tail;
          out.error += tail * 1e-2;
          break;
        }
      }
    }
    if (k + 1 == opt.max_octaves) {
      out.divergent = true;
      out.sum = std::numeric_limits<double>::infinity();
      return out;
    }
    prev = p.value;
    a = b;
  }
  out.sum += comp;
  return out;
}

}  // namespace detail

// Integral of a nonnegative f over (0, inf), octave decomposition around `split`.
template <class F>
RadialIntegral integrate_half_line(F f, double split = 1.0, double inner_onset = 1.0,
                                   double outer_onset = 1.0, const QuadOptions& opt = {}) {
  RadialIntegral r;
  auto in = detail::walk_octaves(f, split, -1, std::min(inner_onset, split), opt);
  auto out = detail::walk_octaves(f, split, +1, std::max(outer_onset, split), opt);
  r.inner = in.sum;
  r.outer = out.sum;
  r.inner_divergent = in.divergent;
  r.outer_divergent = out.divergent;
  r.error = in.error + out.error;
  r.octaves = in.octaves + out.octaves;
  r.value = r.finite() ? r.inner + r.outer : std::numeric_limits<double>::infinity();
  return r;
}

// Surface area of the unit sphere in R^d.
inline double sphere_area(int d) { return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

}  // namespace pamlab
