#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "pamlab/errors.hpp"
#include "pamlab/parallel.hpp"

namespace pamlab {

struct SampleSummary {
  double mean = 0;
  double variance = 0;  // unbiased
  double se = 0;
  std::size_t count = 0;
};

// Summaries are accumulated in index order with compensation, so they do not
// depend on how the samples were produced.
inline SampleSummary summarize(std::span<const double> x) {
  SampleSummary s;
  s.count = x.size();
  if (x.empty()) return s;
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    s.mean = x[0];
    return s;
  }
  CompensatedSum m;
  for (double v : x) m.add(v);
  s.mean = m.value() / x.size();
  if (x.size() > 1) {
    CompensatedSum q;
    for (double v : x) q.add((v - s.mean) * (v - s.mean));
    s.variance = q.value() / (x.size() - 1);
    s.se = std::sqrt(s.variance / x.size());
  }
  return s;
}

inline double t_quantile(double p, double dof) {
  if (dof <= 0) fail(Errc::InvalidArgument, "degrees of freedom must be positive");
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

struct LinearFit {
  double slope = 0, intercept = 0;
  double slope_se = 0;
  double residual_sd = 0;
  std::size_t n = 0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(Errc::InvalidArgument, "least squares needs >= 2 paired points");
  const std::size_t n = x.size();
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  double mx = sx.value() / n, my = sy.value() / n;
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < n; ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  LinearFit f;
  f.n = n;
  if (sxx.value() <= 0) fail(Errc::InvalidArgument, "least squares needs distinct abscissae");
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    CompensatedSum rss;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss.add(r * r);
    }
    f.residual_sd = std::sqrt(rss.value() / (n - 2));
    f.slope_se = f.residual_sd / std::sqrt(sxx.value());
  }
  return f;
}

// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double F = cdf(x[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

// Two-sample KS distance.
inline double ks_distance_2(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace pamlab
