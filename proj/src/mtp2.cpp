#include "qmt/mtp2.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qmt/parallel.hpp"
#include "qmt/special.hpp"

namespace qmt {

namespace {

struct PooledCounts {
  std::vector<double> breakpoints;
  std::vector<int> cx, cy;  // counts <= breakpoint
  bool cross_ties = false;
};

PooledCounts pool(const Sample& x, const Sample& y) {
  PooledCounts pc;
  const auto& xs = x.sorted();
  const auto& ys = y.sorted();
  pc.breakpoints.reserve(xs.size() + ys.size());
  size_t i = 0, j = 0;
  while (i < xs.size() || j < ys.size()) {
    double v;
    if (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j])) {
      v = xs[i];
    } else {
      v = ys[j];
    }
    bool tie_x = false, tie_y = false;
    while (i < xs.size() && xs[i] == v) {
      ++i;
      tie_x = true;
    }
    while (j < ys.size() && ys[j] == v) {
      ++j;
      tie_y = true;
    }
    if (tie_x && tie_y) pc.cross_ties = true;
    pc.breakpoints.push_back(v);
    pc.cx.push_back(static_cast<int>(i));
    pc.cy.push_back(static_cast<int>(j));
  }
  return pc;
}

double band_lower(int count, int n, double tail) {
  if (count <= 0) return 0.0;
  return beta_quantile(BetaParams{static_cast<double>(count), static_cast<double>(n + 1 - count)},
                       tail);
}

double band_upper(int count, int n, double tail) {
  if (count >= n) return 1.0;
  return beta_quantile(
      BetaParams{static_cast<double>(count + 1), static_cast<double>(n - count)}, 1.0 - tail);
}

}  // namespace

TwoSampleBands build_bands_2s(const Sample& x, const Sample& y, const Calibration& calib) {
  const PooledCounts pc = pool(x, y);
  TwoSampleBands b;
  b.tail = calib.tail();
  b.breakpoints = pc.breakpoints;
  const int nx = x.n(), ny = y.n();
  const size_t B = pc.breakpoints.size();
  b.lower_x.resize(B);
  b.upper_x.resize(B);
  b.lower_y.resize(B);
  b.upper_y.resize(B);
  for (size_t t = 0; t < B; ++t) {
    b.lower_x[t] = band_lower(pc.cx[t], nx, b.tail);
    b.upper_x[t] = band_upper(pc.cx[t], nx, b.tail);
    b.lower_y[t] = band_lower(pc.cy[t], ny, b.tail);
    b.upper_y[t] = band_upper(pc.cy[t], ny, b.tail);
  }
  return b;
}

std::string TwoSampleBands::to_csv() const {
  std::ostringstream out;
  out << "r,lower_x,upper_x,lower_y,upper_y\n";
  char buf[200];
  for (size_t t = 0; t < breakpoints.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g\n", breakpoints[t],
                  lower_x[t], upper_x[t], lower_y[t], upper_y[t]);
    out << buf;
  }
  return out.str();
}

Mtp2Result run_mtp_2s(const Sample& x, const Sample& y, const Calibration& calib) {
  if (calib.n_x != x.n() || calib.n_y != y.n()) {
    throw std::invalid_argument("run_mtp_2s: calibration does not match the sample sizes");
  }
  Mtp2Result res;
  res.calibration = calib;
  const PooledCounts pc = pool(x, y);
  res.had_cross_ties = pc.cross_ties;
  res.bands = build_bands_2s(x, y, calib);

  const size_t B = pc.breakpoints.size();
  std::vector<RejectionInterval> raw;
  for (size_t t = 0; t < B; ++t) {
    const double r_lo = pc.breakpoints[t];
    const double r_hi =
        t + 1 < B ? pc.breakpoints[t + 1] : std::numeric_limits<double>::infinity();
    const bool x_above = res.bands.lower_x[t] > res.bands.upper_y[t];
    const bool y_above = res.bands.lower_y[t] > res.bands.upper_x[t];
    const bool hit_below = calib.sides != Sides::upper && x_above;
    const bool hit_above = calib.sides != Sides::lower && y_above;
    if (hit_below || hit_above) {
      RejectionInterval iv;
      iv.side = hit_below ? Side::below : Side::above;
      iv.tau_lo = iv.tau_hi = std::numeric_limits<double>::quiet_NaN();
      iv.r_lo = r_lo;
      iv.r_hi = r_hi;
      iv.witness = static_cast<int>(t);
      raw.push_back(iv);
    }
  }
  res.rejections.intervals = merge_intervals(std::move(raw));
  return res;
}

double critical_level_2s(const Sample& x, const Sample& y, Sides sides) {
  const PooledCounts pc = pool(x, y);
  const SegmentThresholds st = SegmentThresholds::build(x.n(), y.n(), sides);
  double best = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t + 1 < pc.breakpoints.size(); ++t) {
    best = std::min(best, st.at(pc.cx[t], pc.cy[t]));
  }
  return std::isinf(best) ? 1.0 : best;
}

Gof2Result gof_pvalue_2s(const Sample& x, const Sample& y, Sides sides,
                         TwoSampleScheme scheme, long long M, RngStream rng, int threads) {
  Gof2Result out;
  out.critical_level = critical_level_2s(x, y, sides);
  const int nx = x.n(), ny = y.n();
  const SegmentThresholds st = SegmentThresholds::build(nx, ny, sides);

  long long hits = 0, total = 0;
  if (scheme == TwoSampleScheme::permutation &&
      count_orderings(nx, ny, 200000ULL) <= 200000ULL) {
    out.exhaustive = true;
    enumerate_patterns(nx, ny, [&](const std::vector<std::uint8_t>& pat) {
      const double c = st.pattern_critical(pat);
      hits += (std::isinf(c) ? 1.0 : c) <= out.critical_level ? 1 : 0;
      ++total;
    });
  } else {
    total = M;
    hits = parallel_count(0, M, threads, [&](long long rep) {
      thread_local std::vector<std::uint8_t> pattern;
      RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
      if (scheme == TwoSampleScheme::permutation) {
        sample_pattern(nx, ny, r, pattern);
      } else {
        thread_local std::vector<std::pair<double, std::uint8_t>> pooled;
        pooled.resize(static_cast<size_t>(nx + ny));
        for (int i = 0; i < nx + ny; ++i) {
          pooled[static_cast<size_t>(i)] = {r.uniform(),
                                            i < nx ? std::uint8_t{1} : std::uint8_t{0}};
        }
        std::sort(pooled.begin(), pooled.end());
        pattern.resize(static_cast<size_t>(nx + ny));
        for (int i = 0; i < nx + ny; ++i) pattern[static_cast<size_t>(i)] = pooled[static_cast<size_t>(i)].second;
      }
      const double c = st.pattern_critical(pattern);
      return (std::isinf(c) ? 1.0 : c) <= out.critical_level;
    });
  }
  out.p_value = static_cast<double>(hits) / static_cast<double>(total);
  return out;
}

QuantileCounterexample quantile_fwer_counterexample_check(double alpha, int n_x, int n_y) {
  QuantileCounterexample ce;
  ce.alpha = alpha;
  ce.n_x = n_x;
  ce.n_y = n_y;
  RngStream rng(1);
  const Calibration calib = tilde_alpha_mc_2s(alpha, n_x, n_y, Sides::two_sided,
                                              TwoSampleScheme::permutation, 0, rng);
  ce.tilde_alpha = calib.tilde_alpha;
  ce.step_edge = calib.mc_meta ? calib.mc_meta->step_edge : calib.tilde_alpha;
  const double lam = calib.tail();

  // X degenerate at the common median: its bands stay strictly on the
  // wrong side of 1/2, so the Y side alone decides the rejection.
  const double x_low = beta_quantile(BetaParams{static_cast<double>(n_x), 1.0}, lam);
  const double x_up = beta_quantile(BetaParams{1.0, static_cast<double>(n_x)}, 1.0 - lam);
  if (!(x_low > 0.5) || !(x_up < 0.5)) {
    throw numeric_error("counterexample construction requires wider X bands");
  }
  int m_upper = 0;
  for (int m = 1; m <= n_y; ++m) {
    if (beta_quantile(BetaParams{static_cast<double>(m), static_cast<double>(n_y + 1 - m)},
                      lam) > 0.5) {
      m_upper = m;
      break;
    }
  }
  int m_lower = 0;
  for (int m = n_y; m >= 1; --m) {
    if (beta_quantile(BetaParams{static_cast<double>(m), static_cast<double>(n_y + 1 - m)},
                      1.0 - lam) < 0.5) {
      m_lower = m;
      break;
    }
  }
  if (m_upper == 0 || m_lower == 0) {
    throw numeric_error("counterexample: no triggering order statistic");
  }
  ce.m_upper = m_upper;
  ce.m_lower = m_lower;
  // limit probability that Y's m_upper-th order statistic sits at 0, plus
  // the mirror event at 1
  ce.quantile_fwer = binomial_cdf(n_y - m_upper, n_y, 0.5) +
                     binomial_cdf(m_lower - 1, n_y, 0.5);
  return ce;
}

}  // namespace qmt
