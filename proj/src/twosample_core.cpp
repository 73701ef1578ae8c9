#include "qmt/twosample_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qmt/special.hpp"

namespace qmt {

double band_cross_threshold(int i, int n_a, int j, int n_b) {
  if (i <= 0 || j >= n_b) return std::numeric_limits<double>::infinity();
  // At the crossing both bands meet at a common x with
  //   I_x(i, n_a+1-i) + I_x(j+1, n_b-j) = 1,
  // and the per-tail level there is I_x(i, n_a+1-i).
  const BetaParams pa{static_cast<double>(i), static_cast<double>(n_a + 1 - i)};
  const BetaParams pb{static_cast<double>(j + 1), static_cast<double>(n_b - j)};
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_cdf(pa, mid) + beta_cdf(pb, mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double lambda = beta_cdf(pa, 0.5 * (lo + hi));
  return lambda < 0.5 ? lambda : std::numeric_limits<double>::infinity();
}

SegmentThresholds SegmentThresholds::build(int n_x, int n_y, Sides sides) {
  if (n_x < 1 || n_y < 1) throw std::invalid_argument("SegmentThresholds: empty sample");
  SegmentThresholds st;
  st.n_x_ = n_x;
  st.n_y_ = n_y;
  st.sides_ = sides;
  st.t_.resize(static_cast<size_t>(n_x + 1) * (n_y + 1));
  for (int i = 0; i <= n_x; ++i) {
    for (int j = 0; j <= n_y; ++j) {
      double v;
      switch (sides) {
        case Sides::lower:  // X band above Y band
          v = band_cross_threshold(i, n_x, j, n_y);
          break;
        case Sides::upper:  // Y band above X band
          v = band_cross_threshold(j, n_y, i, n_x);
          break;
        default:
          v = std::min(band_cross_threshold(i, n_x, j, n_y),
                       band_cross_threshold(j, n_y, i, n_x));
      }
      st.t_[static_cast<size_t>(i) * (n_y + 1) + j] = v;
    }
  }
  return st;
}

double SegmentThresholds::pattern_critical(const std::vector<std::uint8_t>& pattern) const {
  const int total = n_x_ + n_y_;
  double best = std::numeric_limits<double>::infinity();
  int i = 0, j = 0;
  // outermost segments never reject: skip the last prefix
  for (int p = 0; p < total - 1; ++p) {
    if (pattern[static_cast<size_t>(p)]) {
      ++i;
    } else {
      ++j;
    }
    const double v = at(i, j);
    if (v < best) best = v;
  }
  return best;
}

void sample_pattern(int n_x, int n_y, RngStream& rng, std::vector<std::uint8_t>& out) {
  const int total = n_x + n_y;
  out.resize(static_cast<size_t>(total));
  std::fill(out.begin(), out.begin() + n_x, std::uint8_t{1});
  std::fill(out.begin() + n_x, out.end(), std::uint8_t{0});
  for (int k = total - 1; k > 0; --k) {
    const int r = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(k + 1));
    std::swap(out[static_cast<size_t>(k)], out[static_cast<size_t>(r)]);
  }
}

unsigned long long count_orderings(int n_x, int n_y, unsigned long long cap) {
  unsigned long long c = 1;
  const int k = std::min(n_x, n_y);
  const int n = n_x + n_y;
  for (int i = 1; i <= k; ++i) {
    // c = c * (n - k + i) / i, watching for overflow against the cap
    if (c > cap) return cap + 1;
    c = c * static_cast<unsigned long long>(n - k + i);
    c /= static_cast<unsigned long long>(i);
  }
  return std::min<unsigned long long>(c, cap + 1);
}

void enumerate_patterns(int n_x, int n_y,
                        const std::function<void(const std::vector<std::uint8_t>&)>& visit) {
  const int total = n_x + n_y;
  std::vector<int> pos(static_cast<size_t>(n_x));
  for (int i = 0; i < n_x; ++i) pos[static_cast<size_t>(i)] = i;
  std::vector<std::uint8_t> pattern(static_cast<size_t>(total));
  for (;;) {
    std::fill(pattern.begin(), pattern.end(), std::uint8_t{0});
    for (int p : pos) pattern[static_cast<size_t>(p)] = 1;
    visit(pattern);
    // next combination in lexicographic order
    int i = n_x - 1;
    while (i >= 0 && pos[static_cast<size_t>(i)] == total - n_x + i) --i;
    if (i < 0) break;
    ++pos[static_cast<size_t>(i)];
    for (int j = i + 1; j < n_x; ++j) {
      pos[static_cast<size_t>(j)] = pos[static_cast<size_t>(j - 1)] + 1;
    }
  }
}

}  // namespace qmt
