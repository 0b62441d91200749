#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "pamlab/errors.hpp"

namespace pamlab {

// [0, L)^d with n points per axis; sites in row-major order, last axis fastest.
struct TorusGrid {
  int d = 3;
  double L = 8.0;
  int n = 16;

  TorusGrid() = default;
  TorusGrid(int d_, double L_, int n_) : d(d_), L(L_), n(n_) { validate(); }

  void validate() const {
    if (d < 1 || d > 3) fail(Errc::InvalidDimension, "torus dimension must be 1, 2 or 3");
    if (!(L > 0)) fail(Errc::InvalidArgument, "torus side must be positive");
    if (n < 2 || (n & (n - 1))) fail(Errc::InvalidArgument, "points per axis must be a power of two");
  }
  double h() const { return L / n; }
  double cell_volume() const { return std::pow(h(), d); }
  double volume() const { return std::pow(L, d); }
  std::size_t sites() const {
    std::size_t s = 1;
    for (int i = 0; i < d; ++i) s *= n;
    return s;
  }
  // size of the half-spectrum used by real transforms
  std::size_t modes() const { return sites() / n * (n / 2 + 1); }

  // signed minimal-image offset of axis index i
  int wrap(int i) const {
    i %= n;
    if (i < 0) i += n;
    return i >= n / 2 ? i - n : i;
  }
  std::vector<int> index_of(std::size_t site) const {
    std::vector<int> idx(d);
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(site % n);
      site /= n;
    }
    return idx;
  }
  std::size_t site_of(std::span<const int> idx) const {
    std::size_t s = 0;
    for (int k = 0; k < d; ++k) {
      int i = idx[k] % n;
      if (i < 0) i += n;
      s = s * n + static_cast<std::size_t>(i);
    }
    return s;
  }
  // minimal-image coordinates of a site
  std::vector<double> coords(std::size_t site) const {
    auto idx = index_of(site);
    std::vector<double> x(d);
    for (int k = 0; k < d; ++k) x[k] = wrap(idx[k]) * h();
    return x;
  }
  double radius2(std::size_t site) const {
    auto x = coords(site);
    double r = 0;
    for (double v : x) r += v * v;
    return r;
  }

  // |xi|^2 for each half-spectrum mode, xi = 2 pi j / L
  std::vector<double> mode_norm2() const {
    std::vector<double> out(modes());
    const int last = n / 2 + 1;
    const double k0 = 2.0 * M_PI / L;
    std::size_t m = 0;
    std::vector<int> idx(d, 0);
    while (true) {
      double s = 0;
      for (int k = 0; k < d; ++k) {
        int j = (k == d - 1) ? idx[k] : (idx[k] >= n / 2 ? idx[k] - n : idx[k]);
        s += (k0 * j) * (k0 * j);
      }
      out[m++] = s;
      int k = d - 1;
      while (k >= 0) {
        int lim = (k == d - 1) ? last : n;
        if (++idx[k] < lim) break;
        idx[k--] = 0;
      }
      if (k < 0) break;
    }
    return out;
  }
  // multiplicity of each half-spectrum mode in the full spectrum (1 or 2)
  std::vector<double> mode_weight() const {
    std::vector<double> w(modes(), 2.0);
    const int last = n / 2 + 1;
    for (std::size_t m = 0; m < w.size(); ++m) {
      int j = static_cast<int>(m % last);
      if (j == 0 || j == n / 2) w[m] = 1.0;
    }
    return w;
  }

  bool operator==(const TorusGrid& o) const { return d == o.d && L == o.L && n == o.n; }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }
};

struct FieldState {
  TorusGrid grid;
  std::vector<double> values;
  double time = 0.0;

  FieldState() = default;
  FieldState(const TorusGrid& g, double v = 0.0, double t = 0.0) : grid(g), values(g.sites(), v), time(t) {}
};

using Spectrum = std::vector<std::complex<double>>;

// Real-to-complex transforms on a torus grid. FFTW plans are made once per
// shape under a lock with FFTW_ESTIMATE, so the chosen algorithm (and therefore
// every bit of the output) is fixed for a given build.
class TorusFft {
 public:
  explicit TorusFft(const TorusGrid& g) : grid_(g) {
    std::lock_guard<std::mutex> lock(mutex());
    auto key = std::make_tuple(g.d, g.n);
    auto& cache = plans();
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<int> dims(g.d, g.n);
      std::vector<double> r(g.sites());
      std::vector<fftw_complex> c(g.modes());
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      Plans p;
      p.fwd = fftw_plan_dft_r2c(g.d, dims.data(), r.data(), c.data(), flags);
      p.bwd = fftw_plan_dft_c2r(g.d, dims.data(), c.data(), r.data(), flags);
      it = cache.emplace(key, p).first;
    }
    p_ = it->second;
  }

  const TorusGrid& grid() const { return grid_; }

  // unnormalized: out_j = sum_x in_x e^{-i xi_j x}
  void forward(std::span<const double> in, Spectrum& out) const {
    out.resize(grid_.modes());
    scratch_.assign(in.begin(), in.end());
    fftw_execute_dft_r2c(p_.fwd, scratch_.data(), reinterpret_cast<fftw_complex*>(out.data()));
  }
  // unnormalized inverse; destroys `in`
  void backward(Spectrum& in, std::span<double> out) const {
    fftw_execute_dft_c2r(p_.bwd, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  }

 private:
  struct Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
  };
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }
  static std::map<std::tuple<int, int>, Plans>& plans() {
    static std::map<std::tuple<int, int>, Plans> p;
    return p;
  }
  TorusGrid grid_;
  Plans p_;
  mutable std::vector<double> scratch_;
};

// Applies a real diagonal multiplier in Fourier space: u <- F^{-1}(mult * F u).
class SpectralMultiplier {
 public:
  SpectralMultiplier(const TorusGrid& g, std::vector<double> mult) : fft_(g), mult_(std::move(mult)) {
    const double inv = 1.0 / static_cast<double>(g.sites());
    for (auto& m : mult_) m *= inv;
  }
  void apply(std::span<double> u) const {
    fft_.forward(u, spec_);
    for (std::size_t j = 0; j < spec_.size(); ++j) spec_[j] *= mult_[j];
    fft_.backward(spec_, u);
  }
  const TorusFft& fft() const { return fft_; }

 private:
  TorusFft fft_;
  std::vector<double> mult_;
  mutable Spectrum spec_;
};

// e^{-c |xi|^2 t} as a half-spectrum multiplier.
inline std::vector<double> heat_symbol(const TorusGrid& g, double t, double c = 0.5) {
  auto k2 = g.mode_norm2();
  for (auto& v : k2) v = std::exp(-c * v * t);
  return k2;
}

// Exact torus heat flow of the generator (1/2)Δ over time t.
inline void torus_heat_flow(FieldState& f, double t) {
  SpectralMultiplier(f.grid, heat_symbol(f.grid, t)).apply(f.values);
  f.time += t;
}

}  // namespace pamlab
