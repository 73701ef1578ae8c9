#pragma once

#include <cmath>
#include <cstdint>

namespace qmt {

// Counter-based random stream: every draw is a pure function of
// (seed, stream, counter), so replications can be partitioned across
// workers by stream id and the results do not depend on the partition.
//
// The generator is SplitMix64 keyed by a mix of seed and stream; it is
// fast, has a 64-bit state, and passes the usual statistical batteries,
// which is all the Monte Carlo here needs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + stream * kGolden)),
        counter_(0) {}

  // Derived stream, independent of this one for practical purposes.
  RngStream substream(std::uint64_t id) const {
    RngStream r(0);
    r.base_ = mix64(base_ ^ (id * 0xda942042e4dd58b5ULL));
    r.counter_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix64(base_ + (++counter_) * kGolden); }

  // Uniform on the open interval (0,1); never returns an exact endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  // Standard normal via the polar method (no cached spare).
  double normal() {
    for (;;) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

  // Gamma(shape, 1) by Marsaglia-Tsang; shape may be fractional.
  double gamma(double shape) {
    if (shape < 1.0) {
      // boost the shape and correct with a power of a uniform
      double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t base_;
  std::uint64_t counter_;
};

}  // namespace qmt
