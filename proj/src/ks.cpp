#include "qmt/ks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qmt/parallel.hpp"
#include "qmt/sampling.hpp"
#include "qmt/special.hpp"
#include "qmt/twosample_core.hpp"

namespace qmt {

double ks_stat_1s(const std::vector<double>& f0x, Sides sides) {
  const int n = static_cast<int>(f0x.size());
  const double inv = 1.0 / n;
  double dplus = 0.0, dminus = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double t = f0x[static_cast<size_t>(k - 1)];
    dplus = std::max(dplus, k * inv - t);
    dminus = std::max(dminus, t - (k - 1) * inv);
  }
  const double scale = std::sqrt(static_cast<double>(n));
  switch (sides) {
    case Sides::lower: return scale * dplus;
    case Sides::upper: return scale * dminus;
    default: return scale * std::max(dplus, dminus);
  }
}

double weighted_ks_stat_1s(const std::vector<double>& f0x) {
  const int n = static_cast<int>(f0x.size());
  const double inv = 1.0 / n;
  double best = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double t = f0x[static_cast<size_t>(k - 1)];
    if (t <= 0.0 || t >= 1.0) return std::numeric_limits<double>::infinity();
    const double w = std::sqrt(t * (1.0 - t));
    best = std::max(best, std::max(k * inv - t, t - (k - 1) * inv) / w);
  }
  return best * std::sqrt(static_cast<double>(n));
}

double ks_stat_pattern_2s(const std::vector<std::uint8_t>& pattern, int n_x, int n_y,
                          Sides sides) {
  double dplus = 0.0, dminus = 0.0;
  int i = 0, j = 0;
  const double ax = 1.0 / n_x, ay = 1.0 / n_y;
  for (std::uint8_t isx : pattern) {
    if (isx) {
      ++i;
    } else {
      ++j;
    }
    const double diff = i * ax - j * ay;
    dplus = std::max(dplus, diff);
    dminus = std::max(dminus, -diff);
  }
  const double scale = std::sqrt(static_cast<double>(n_x) * n_y / (n_x + n_y));
  switch (sides) {
    case Sides::lower: return scale * dplus;
    case Sides::upper: return scale * dminus;
    default: return scale * std::max(dplus, dminus);
  }
}

namespace {

// smallest attainable value with a right-tail probability at most alpha
double conservative_upper_quantile(std::vector<double>& values, double alpha) {
  std::sort(values.begin(), values.end());
  const auto R = static_cast<long long>(values.size());
  long long idx = R - 1 - static_cast<long long>(std::floor(alpha * static_cast<double>(R)));
  idx = std::max<long long>(idx, 0);
  double c = values[static_cast<size_t>(idx)];
  // with ties, walk down while the tail stays within alpha
  while (idx > 0) {
    const double cand = values[static_cast<size_t>(idx - 1)];
    const auto above = R - (std::upper_bound(values.begin(), values.end(), cand) -
                            values.begin());
    if (static_cast<double>(above) > alpha * static_cast<double>(R)) break;
    c = cand;
    --idx;
  }
  return c;
}

double tail_probability(const std::vector<double>& sorted_values, double c) {
  const auto above = sorted_values.end() -
                     std::upper_bound(sorted_values.begin(), sorted_values.end(), c);
  return static_cast<double>(above) / static_cast<double>(sorted_values.size());
}

std::vector<double> sample_ks_null_1s(int n, Sides sides, bool weighted, long long reps,
                                      RngStream rng, int threads) {
  std::vector<double> stats(static_cast<size_t>(reps));
  parallel_for(0, reps, threads, [&](long long rep) {
    thread_local std::vector<double> u;
    RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
    sample_uniform_order_stats(n, r, u);
    stats[static_cast<size_t>(rep)] = weighted ? weighted_ks_stat_1s(u) : ks_stat_1s(u, sides);
  });
  return stats;
}

std::vector<double> sample_ks_null_2s(int n_x, int n_y, Sides sides, long long reps,
                                      RngStream rng, int threads) {
  std::vector<double> stats;
  if (count_orderings(n_x, n_y, 200000ULL) <= 200000ULL) {
    enumerate_patterns(n_x, n_y, [&](const std::vector<std::uint8_t>& pat) {
      stats.push_back(ks_stat_pattern_2s(pat, n_x, n_y, sides));
    });
    return stats;
  }
  stats.resize(static_cast<size_t>(reps));
  parallel_for(0, reps, threads, [&](long long rep) {
    thread_local std::vector<std::uint8_t> pattern;
    RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
    sample_pattern(n_x, n_y, r, pattern);
    stats[static_cast<size_t>(rep)] = ks_stat_pattern_2s(pattern, n_x, n_y, sides);
  });
  return stats;
}

}  // namespace

double ks_exact_critical_1s(int n, double alpha, Sides sides, long long reps, RngStream rng,
                            int threads) {
  auto stats = sample_ks_null_1s(n, sides, false, reps, rng, threads);
  return conservative_upper_quantile(stats, alpha);
}

double weighted_ks_critical_1s(int n, double alpha, long long reps, RngStream rng,
                               int threads) {
  auto stats = sample_ks_null_1s(n, Sides::two_sided, true, reps, rng, threads);
  return conservative_upper_quantile(stats, alpha);
}

double ks_asymptotic_critical(double alpha, Sides sides) {
  if (sides == Sides::two_sided) return kolmogorov_critical(alpha);
  return std::sqrt(-0.5 * std::log(alpha));
}

double ks_exact_critical_2s(int n_x, int n_y, double alpha, Sides sides, long long reps,
                            RngStream rng, int threads) {
  auto stats = sample_ks_null_2s(n_x, n_y, sides, reps, rng, threads);
  return conservative_upper_quantile(stats, alpha);
}

namespace {

std::vector<double> null_cdf_values(const Sample& sample, const NullModel& null) {
  std::vector<double> out(sample.sorted().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = null.cdf(sample.sorted()[i]);
  return out;
}

void add_segment_interval(std::vector<RejectionInterval>& out, Side side, double r_lo,
                          double r_hi, double tau_lo, double tau_hi, int witness) {
  if (!(r_hi > r_lo)) return;
  RejectionInterval iv;
  iv.side = side;
  iv.r_lo = r_lo;
  iv.r_hi = r_hi;
  iv.tau_lo = tau_lo;
  iv.tau_hi = tau_hi;
  iv.witness = witness;
  out.push_back(iv);
}

// rejection regions of the unweighted one-sample statistic: on each
// segment the empirical CDF is e = k/n, so the test rejects where the
// null CDF is further than c/sqrt(n) from e
RejectionSet ks_regions_1s(const Sample& sample, const NullModel& null,
                           const std::vector<double>& f0x, double c, Sides sides) {
  const int n = sample.n();
  const double band = c / std::sqrt(static_cast<double>(n));
  const auto& xs = sample.sorted();
  std::vector<RejectionInterval> raw;
  const double inf = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const double e = static_cast<double>(k) / n;
    const double seg_lo = k == 0 ? -inf : xs[static_cast<size_t>(k - 1)];
    const double seg_hi = k == n ? inf : xs[static_cast<size_t>(k)];
    const double f_lo = k == 0 ? 0.0 : f0x[static_cast<size_t>(k - 1)];
    const double f_hi = k == n ? 1.0 : f0x[static_cast<size_t>(k)];
    if (sides != Sides::upper) {
      // empirical CDF above the null: F0(x) < e - band
      const double theta = e - band;
      if (theta > 0.0 && f_lo < theta) {
        const double cut = theta >= 1.0 ? inf : null.quantile(theta);
        add_segment_interval(raw, Side::below, seg_lo, std::min(seg_hi, cut), f_lo,
                             std::min(f_hi, theta), k);
      }
    }
    if (sides != Sides::lower) {
      const double theta = e + band;
      if (theta < 1.0 && f_hi > theta) {
        const double cut = theta <= 0.0 ? -inf : null.quantile(theta);
        add_segment_interval(raw, Side::above, std::max(seg_lo, cut), seg_hi,
                             std::max(f_lo, theta), f_hi, k);
      }
    }
  }
  RejectionSet rs;
  rs.intervals = merge_intervals(std::move(raw));
  return rs;
}

// weighted variant: |e - t| > (c/sqrt(n)) sqrt(t(1-t)) is a quadratic in
// the null CDF value t, rejected outside the root interval
RejectionSet weighted_ks_regions_1s(const Sample& sample, const NullModel& null,
                                    const std::vector<double>& f0x, double c) {
  const int n = sample.n();
  const double q = c / std::sqrt(static_cast<double>(n));
  const auto& xs = sample.sorted();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<RejectionInterval> raw;
  for (int k = 0; k <= n; ++k) {
    const double e = static_cast<double>(k) / n;
    const double seg_lo = k == 0 ? -inf : xs[static_cast<size_t>(k - 1)];
    const double seg_hi = k == n ? inf : xs[static_cast<size_t>(k)];
    const double f_lo = k == 0 ? 0.0 : f0x[static_cast<size_t>(k - 1)];
    const double f_hi = k == n ? 1.0 : f0x[static_cast<size_t>(k)];
    const double a = 1.0 + q * q;
    const double b = 2.0 * e + q * q;
    const double disc = b * b - 4.0 * a * e * e;
    double t_minus, t_plus;
    if (disc <= 0.0) {
      // no interior root: every t in (0,1) with t != e rejects
      t_minus = e;
      t_plus = e;
    } else {
      const double root = std::sqrt(disc);
      t_minus = (b - root) / (2.0 * a);
      t_plus = (b + root) / (2.0 * a);
    }
    if (f_lo < t_minus && t_minus > 0.0) {
      const double cut = t_minus >= 1.0 ? inf : null.quantile(std::max(1e-300, t_minus));
      add_segment_interval(raw, Side::below, seg_lo, std::min(seg_hi, cut), f_lo,
                           std::min(f_hi, t_minus), k);
    }
    if (f_hi > t_plus && t_plus < 1.0) {
      const double cut = t_plus <= 0.0 ? -inf : null.quantile(std::min(1.0 - 1e-16, t_plus));
      add_segment_interval(raw, Side::above, std::max(seg_lo, cut), seg_hi,
                           std::max(f_lo, t_plus), f_hi, k);
    }
  }
  RejectionSet rs;
  rs.intervals = merge_intervals(std::move(raw));
  return rs;
}

}  // namespace

KsResult ks_mtp_1s(const Sample& sample, const NullModel& null, double alpha, Sides sides,
                   KsMode mode, long long mc_reps, RngStream rng, int threads) {
  KsResult res;
  const auto f0x = null_cdf_values(sample, null);
  res.statistic = ks_stat_1s(f0x, sides);
  if (mode == KsMode::exact) {
    auto stats = sample_ks_null_1s(sample.n(), sides, false, mc_reps, rng, threads);
    res.critical_value = conservative_upper_quantile(stats, alpha);
    std::sort(stats.begin(), stats.end());
    // P(D >= observed) under the null, with >= for discreteness
    const auto geq = stats.end() - std::lower_bound(stats.begin(), stats.end(), res.statistic);
    res.p_value = static_cast<double>(geq) / static_cast<double>(stats.size());
    res.exact = true;
  } else {
    res.critical_value = ks_asymptotic_critical(alpha, sides);
    res.p_value = sides == Sides::two_sided
                      ? kolmogorov_survival(res.statistic)
                      : std::exp(-2.0 * res.statistic * res.statistic);
  }
  if (res.statistic > res.critical_value) {
    res.rejections = ks_regions_1s(sample, null, f0x, res.critical_value, sides);
  }
  return res;
}

KsResult ks_mtp_2s(const Sample& x, const Sample& y, double alpha, Sides sides, KsMode mode,
                   long long mc_reps, RngStream rng, int threads) {
  KsResult res;
  const int nx = x.n(), ny = y.n();
  // pooled scan over unique breakpoints
  std::vector<double> bp;
  std::vector<int> cx, cy;
  {
    const auto& a = x.sorted();
    const auto& b = y.sorted();
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      const double v = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
      while (i < a.size() && a[i] == v) ++i;
      while (j < b.size() && b[j] == v) ++j;
      bp.push_back(v);
      cx.push_back(static_cast<int>(i));
      cy.push_back(static_cast<int>(j));
    }
  }
  const double scale = std::sqrt(static_cast<double>(nx) * ny / (nx + ny));
  double dplus = 0.0, dminus = 0.0;
  for (size_t t = 0; t < bp.size(); ++t) {
    const double diff = static_cast<double>(cx[t]) / nx - static_cast<double>(cy[t]) / ny;
    dplus = std::max(dplus, diff);
    dminus = std::max(dminus, -diff);
  }
  res.statistic = scale * (sides == Sides::lower    ? dplus
                           : sides == Sides::upper ? dminus
                                                   : std::max(dplus, dminus));
  if (mode == KsMode::exact) {
    auto stats = sample_ks_null_2s(nx, ny, sides, mc_reps, rng, threads);
    res.critical_value = conservative_upper_quantile(stats, alpha);
    std::sort(stats.begin(), stats.end());
    const auto geq = stats.end() - std::lower_bound(stats.begin(), stats.end(),
                                                    res.statistic - 1e-12);
    res.p_value = static_cast<double>(geq) / static_cast<double>(stats.size());
    res.exact = true;
  } else {
    res.critical_value = ks_asymptotic_critical(alpha, sides);
    res.p_value = sides == Sides::two_sided
                      ? kolmogorov_survival(res.statistic)
                      : std::exp(-2.0 * res.statistic * res.statistic);
  }
  // rejected segments
  if (res.statistic > res.critical_value) {
    const double band = res.critical_value / scale;
    std::vector<RejectionInterval> raw;
    const double inf = std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < bp.size(); ++t) {
      const double diff = static_cast<double>(cx[t]) / nx - static_cast<double>(cy[t]) / ny;
      const bool below = sides != Sides::upper && diff > band;
      const bool above = sides != Sides::lower && -diff > band;
      if (below || above) {
        RejectionInterval iv;
        iv.side = below ? Side::below : Side::above;
        iv.tau_lo = iv.tau_hi = std::numeric_limits<double>::quiet_NaN();
        iv.r_lo = bp[t];
        iv.r_hi = t + 1 < bp.size() ? bp[t + 1] : inf;
        iv.witness = static_cast<int>(t);
        raw.push_back(iv);
      }
    }
    res.rejections.intervals = merge_intervals(std::move(raw));
  }
  return res;
}

KsResult weighted_ks_mtp_1s(const Sample& sample, const NullModel& null, double alpha,
                            long long mc_reps, RngStream rng, int threads) {
  KsResult res;
  const auto f0x = null_cdf_values(sample, null);
  res.statistic = weighted_ks_stat_1s(f0x);
  auto stats = sample_ks_null_1s(sample.n(), Sides::two_sided, true, mc_reps, rng, threads);
  res.critical_value = conservative_upper_quantile(stats, alpha);
  res.exact = true;
  std::sort(stats.begin(), stats.end());
  const auto geq = stats.end() - std::lower_bound(stats.begin(), stats.end(), res.statistic);
  res.p_value = static_cast<double>(geq) / static_cast<double>(stats.size());
  if (res.statistic > res.critical_value) {
    res.rejections = weighted_ks_regions_1s(sample, null, f0x, res.critical_value);
  }
  return res;
}

}  // namespace qmt
