#include "qmt/mtp1.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qmt/sampling.hpp"
#include "qmt/special.hpp"

namespace qmt {

QuantileGrid build_grid_tail(int n, double tail, Sides sides) {
  if (n < 1) throw std::invalid_argument("build_grid: n < 1");
  if (!(tail > 0.0 && tail < 0.5)) throw std::invalid_argument("build_grid: tail outside (0,0.5)");
  QuantileGrid g;
  g.n = n;
  g.tail = tail;
  for (int k = 1; k <= n; ++k) {
    const BetaParams p{static_cast<double>(k), static_cast<double>(n + 1 - k)};
    if (sides != Sides::upper) g.ell.push_back(beta_quantile(p, tail));
    if (sides != Sides::lower) g.u.push_back(beta_quantile(p, 1.0 - tail));
  }
  return g;
}

QuantileGrid build_grid(int n, const Calibration& calib) {
  if (calib.n_x != n || calib.n_y != 0) {
    throw std::invalid_argument("build_grid: calibration does not match n");
  }
  return build_grid_tail(n, calib.tail(), calib.sides);
}

Mtp1Result run_mtp_1s(const Sample& sample, const NullModel& null, const Calibration& calib) {
  const int n = sample.n();
  Mtp1Result res;
  res.calibration = calib;
  res.grid = build_grid(n, calib);
  res.had_ties = sample.tie_count() > 0;

  const auto& xs = sample.sorted();
  std::vector<RejectionInterval> raw;
  for (int k = 1; k <= n; ++k) {
    const double f0x = null.cdf(xs[static_cast<size_t>(k - 1)]);
    if (!res.grid.ell.empty()) {
      const double lk = res.grid.ell[static_cast<size_t>(k - 1)];
      if (f0x < lk) {
        RejectionInterval iv;
        iv.side = Side::below;
        iv.tau_lo = f0x;
        iv.tau_hi = lk;
        iv.r_lo = xs[static_cast<size_t>(k - 1)];
        iv.r_hi = null.quantile(lk);
        iv.witness = k;
        raw.push_back(iv);
      }
    }
    if (!res.grid.u.empty()) {
      const double uk = res.grid.u[static_cast<size_t>(k - 1)];
      if (f0x > uk) {
        RejectionInterval iv;
        iv.side = Side::above;
        iv.tau_lo = uk;
        iv.tau_hi = f0x;
        iv.r_lo = null.quantile(uk);
        iv.r_hi = xs[static_cast<size_t>(k - 1)];
        iv.witness = k;
        raw.push_back(iv);
      }
    }
  }
  res.rejections.intervals = merge_intervals(std::move(raw));
  return res;
}

std::string PValue::display() const {
  char buf[48];
  if (censored_low) {
    std::snprintf(buf, sizeof buf, "<%g", value);
  } else if (censored_high) {
    std::snprintf(buf, sizeof buf, ">%g", value);
  } else {
    std::snprintf(buf, sizeof buf, "%.6g", value);
  }
  return buf;
}

namespace {

// Smallest per-tail level at which some order statistic would reject.
double critical_tail_level(const std::vector<double>& f0x, Sides sides) {
  const int n = static_cast<int>(f0x.size());
  double s = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= n; ++k) {
    const BetaParams p{static_cast<double>(k), static_cast<double>(n + 1 - k)};
    const double c = beta_cdf(p, f0x[static_cast<size_t>(k - 1)]);
    if (sides != Sides::upper) s = std::min(s, c);
    if (sides != Sides::lower) s = std::min(s, 1.0 - c);
  }
  return s;
}

// Inverse of the familywise->pointwise map on the formula's domain.
PValue invert_formula(double target_tail, int n, Sides sides) {
  const double a_lo_2s = 0.001, a_hi_2s = 0.9;
  auto tail_of_alpha = [&](double a) {
    if (sides == Sides::two_sided) return 0.5 * tilde_alpha_formula(a, n);
    return 0.5 * tilde_alpha_formula(one_sided_adjust(a), n);
  };
  double lo, hi;
  if (sides == Sides::two_sided) {
    lo = a_lo_2s;
    hi = a_hi_2s;
  } else {
    lo = 1.0 - std::sqrt(1.0 - a_lo_2s);
    hi = 1.0 - std::sqrt(1.0 - a_hi_2s);
  }
  PValue p;
  if (target_tail <= tail_of_alpha(lo)) {
    p.value = lo;
    p.censored_low = true;
    return p;
  }
  if (target_tail >= tail_of_alpha(hi)) {
    p.value = hi;
    p.censored_high = true;
    return p;
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail_of_alpha(mid) < target_tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  p.value = 0.5 * (lo + hi);
  return p;
}

}  // namespace

PValue gof_pvalue_1s(const Sample& sample, const NullModel& null, Sides sides) {
  const int n = sample.n();
  std::vector<double> f0x(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) f0x[static_cast<size_t>(i)] = null.cdf(sample.sorted()[static_cast<size_t>(i)]);
  const double s = critical_tail_level(f0x, sides);
  if (n >= 4) return invert_formula(s, n, sides);
  // Formula domain starts at n=4; for smaller samples use the exact Monte
  // Carlo distribution of the critical level under uniformity.
  RngStream rng(0x9d5c1f2bULL, 17);
  const long long M = 200000;
  long long hits = 0;
  std::vector<double> u;
  for (long long rep = 0; rep < M; ++rep) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
    sample_uniform_order_stats(n, r, u);
    if (critical_tail_level(u, sides) <= s) ++hits;
  }
  PValue p;
  p.value = static_cast<double>(hits) / static_cast<double>(M);
  return p;
}

double Band::lower_at(double v) const {
  const auto idx = std::upper_bound(x.begin(), x.end(), v) - x.begin();
  return idx == 0 ? 0.0 : lower[static_cast<size_t>(idx - 1)];
}

double Band::upper_at(double v) const {
  const auto idx = std::upper_bound(x.begin(), x.end(), v) - x.begin();
  return idx == static_cast<std::ptrdiff_t>(x.size()) ? 1.0
                                                      : upper[static_cast<size_t>(idx)];
}

bool Band::covers(const NullModel& cdf) const {
  // Dual of the rejection rule: the CDF stays inside the envelope exactly
  // when every F(x_k) lies in [ell_k, u_k].
  for (size_t k = 0; k < x.size(); ++k) {
    const double f = cdf.cdf(x[k]);
    if (f < lower[k] || f > upper[k]) return false;
  }
  return true;
}

std::string Band::to_csv() const {
  std::ostringstream out;
  out << "x,lower,upper\n";
  char buf[120];
  std::snprintf(buf, sizeof buf, "-inf,0,%.10g\n", upper_left);
  out << buf;
  for (size_t k = 0; k < x.size(); ++k) {
    const double up_right = k + 1 < x.size() ? upper[k + 1] : 1.0;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", x[k], lower[k], up_right);
    out << buf;
  }
  return out.str();
}

Band band_from_grid(const Sample& sample, const QuantileGrid& grid) {
  if (grid.ell.size() != sample.sorted().size() || grid.u.size() != sample.sorted().size()) {
    throw std::invalid_argument("band_from_grid: need a two-sided grid matching the sample");
  }
  Band b;
  b.x = sample.sorted();
  b.lower = grid.ell;
  b.upper = grid.u;
  b.lower_left = 0.0;
  b.upper_left = grid.u.front();
  return b;
}

Band confidence_band_1s(const Sample& sample, double alpha) {
  const Calibration calib = calibrate_formula_1s(alpha, sample.n(), Sides::two_sided);
  const QuantileGrid grid = build_grid(sample.n(), calib);
  return band_from_grid(sample, grid);
}

}  // namespace qmt
