#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace pamlab {

// Philox4x32-10 (Salmon et al. counter-based generator).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
      if (r) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
      const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
      c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
           std::uint32_t(p0)};
    }
    return c;
  }
};

namespace detail {

inline double u53(std::uint32_t hi, std::uint32_t lo) {
  std::uint64_t x = (std::uint64_t(hi) << 32 | lo) >> 11;
  return (static_cast<double>(x) + 0.5) * 0x1.0p-53;  // open interval (0,1)
}

}  // namespace detail

enum class Purpose : std::uint32_t {
  Noise = 1,
  Bridge = 2,
  BridgeAux = 3,
  Isometry = 4,
  Zeta = 5,
  Test = 6,
};

// Stateless random numbers addressed by (seed, stream, purpose, step, index).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0) : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)} {}
  std::uint64_t seed() const { return std::uint64_t(key_[1]) << 32 | key_[0]; }

  Philox4x32::Counter block(std::uint32_t stream, Purpose purpose, std::int64_t step, std::uint32_t index) const {
    return Philox4x32::apply({index, step_word(step), stream, static_cast<std::uint32_t>(purpose)}, key_);
  }

  // Standard normals via Box-Muller, two per counter block.
  void normals(std::uint32_t stream, Purpose purpose, std::int64_t step, std::span<double> out) const {
    const std::size_t n = out.size();
    for (std::size_t i = 0, b = 0; i < n; i += 2, ++b) {
      auto c = block(stream, purpose, step, static_cast<std::uint32_t>(b));
      double u1 = detail::u53(c[0], c[1]), u2 = detail::u53(c[2], c[3]);
      double r = std::sqrt(-2.0 * std::log(u1));
      double s, co;
      sincos_2pi(u2, s, co);
      out[i] = r * co;
      if (i + 1 < n) out[i + 1] = r * s;
    }
  }

  double uniform(std::uint32_t stream, Purpose purpose, std::int64_t step, std::uint32_t index) const {
    auto c = block(stream, purpose, step, index);
    return detail::u53(c[0], c[1]);
  }

  // Steps are stored with an offset so negative (pre-zero) times map to distinct counters.
  static constexpr std::int64_t kStepOffset = std::int64_t(1) << 31;
  static bool step_in_range(std::int64_t step) { return step >= -kStepOffset && step < kStepOffset; }

 private:
  static std::uint32_t step_word(std::int64_t step) { return static_cast<std::uint32_t>(step + kStepOffset); }
  static void sincos_2pi(double u, double& s, double& c) {
    const double a = 2.0 * M_PI * u;
    s = std::sin(a);
    c = std::cos(a);
  }
  Philox4x32::Key key_;
};

// Sequential view of one (stream, purpose) pair: a UniformRandomBitGenerator.
class StreamRng {
 public:
  using result_type = std::uint64_t;
  StreamRng(const CounterRng& base, std::uint32_t stream, Purpose purpose) : base_(base), stream_(stream), purpose_(purpose) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    auto c = next_block();
    return std::uint64_t(c[0]) << 32 | c[1];
  }
  double uniform() {
    auto c = next_block();
    return detail::u53(c[0], c[1]);
  }
  // skip `blocks` counter blocks
  void discard_block(std::uint64_t blocks) {
    std::uint64_t pos = (std::uint64_t(hi_) << 32 | lo_) + blocks;
    hi_ = static_cast<std::uint32_t>(pos >> 32);
    lo_ = static_cast<std::uint32_t>(pos);
    have_spare_ = false;
  }
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto c = next_block();
    double r = std::sqrt(-2.0 * std::log(detail::u53(c[0], c[1])));
    double a = 2.0 * M_PI * detail::u53(c[2], c[3]);
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  Philox4x32::Counter next_block() {
    auto c = base_.block(stream_, purpose_, static_cast<std::int64_t>(hi_) - CounterRng::kStepOffset, lo_);
    if (++lo_ == 0) ++hi_;
    return c;
  }
  CounterRng base_;
  std::uint32_t stream_;
  Purpose purpose_;
  std::uint32_t lo_ = 0, hi_ = 0;
  double spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace pamlab
