#include "qmt/quantile2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qmt/parallel.hpp"
#include "qmt/sampling.hpp"
#include "qmt/special.hpp"

namespace qmt {

bool QuantileCalibCache::get(std::uint64_t key, double& out) const {
  auto it = map_.find(key);
  if (it == map_.end()) return false;
  out = it->second;
  return true;
}

void QuantileCalibCache::put(std::uint64_t key, double v) { map_[key] = v; }

namespace {

int default_m(int n_x, int n_y) {
  const int n = std::min(n_x, n_y);
  return std::max(1, static_cast<int>(std::floor(std::pow(n, 0.4))));
}

// Fractional index k solving P(Beta(k, n+1-k) < tau) = q, by bisection in
// k; the probability is strictly decreasing in k.
double beta_tail_index(int n, double tau, double q) {
  double lo = 1e-9, hi = n + 1.0 - 1e-9;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_cdf(BetaParams{mid, n + 1.0 - mid}, tau) > q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Interpolated order statistic at fractional position k; positions in
// (0, 1) and (n, n+1) anchor at the sample extremes.
double frac_order_stat(const std::vector<double>& sorted, double k) {
  if (k <= 1.0) return sorted.front();
  if (k >= static_cast<double>(sorted.size())) return sorted.back();
  const int fl = static_cast<int>(std::floor(k));
  const double frac = k - fl;
  if (frac == 0.0) return sorted[static_cast<size_t>(fl - 1)];
  return (1.0 - frac) * sorted[static_cast<size_t>(fl - 1)] +
         frac * sorted[static_cast<size_t>(fl)];
}

struct IndexPlan {
  // per tested quantile, fractional order-statistic positions for each
  // sample; zero when the position is unused by the current sides
  std::vector<double> x_low, x_high, y_low, y_high;
  bool feasible = true;
};

// The confidence interval for delta_j = F_Y^{-1}(tau_j) - F_X^{-1}(tau_j)
// pairs a low position in one sample with a high position in the other:
//   two-sided: [Y(y_low) - X(x_high), Y(y_high) - X(x_low)]
//   upper (detect delta < 0): (-inf, Y(y_high) - X(x_low)]
//   lower (detect delta > 0): [Y(y_low) - X(x_high), +inf)
// The two-sided positions come from beta-tail equations at lambda/2 per
// tail; the one-sided ones use the normal-approximation index shift.
IndexPlan build_indices(int n_x, int n_y, const std::vector<double>& taus, double lambda,
                        Sides sides) {
  IndexPlan pl;
  const size_t m = taus.size();
  pl.x_low.assign(m, 0.0);
  pl.x_high.assign(m, 0.0);
  pl.y_low.assign(m, 0.0);
  pl.y_high.assign(m, 0.0);
  auto check = [&](double k, int n) {
    if (!(k > 0.0 && k < n + 1.0)) pl.feasible = false;
    return k;
  };
  if (sides == Sides::two_sided) {
    for (size_t j = 0; j < m; ++j) {
      const double t = taus[j];
      pl.x_high[j] = check(beta_tail_index(n_x, t, 0.5 * lambda), n_x);
      pl.x_low[j] = check(beta_tail_index(n_x, t, 1.0 - 0.5 * lambda), n_x);
      pl.y_high[j] = check(beta_tail_index(n_y, t, 0.5 * lambda), n_y);
      pl.y_low[j] = check(beta_tail_index(n_y, t, 1.0 - 0.5 * lambda), n_y);
    }
    return pl;
  }
  const double z = normal_quantile(1.0 - lambda);
  for (size_t j = 0; j < m; ++j) {
    const double t = taus[j];
    const double sd = std::sqrt(t * (1.0 - t));
    if (sides == Sides::upper) {
      pl.y_high[j] =
          check((t + z * sd / std::sqrt(static_cast<double>(n_y))) * (n_y + 1), n_y);
      pl.x_low[j] =
          check((t - z * sd / std::sqrt(static_cast<double>(n_x))) * (n_x + 1), n_x);
    } else {
      pl.y_low[j] =
          check((t - z * sd / std::sqrt(static_cast<double>(n_y))) * (n_y + 1), n_y);
      pl.x_high[j] =
          check((t + z * sd / std::sqrt(static_cast<double>(n_x))) * (n_x + 1), n_x);
    }
  }
  return pl;
}

// Dirichlet view of one sample's CDF values at the planned indices.
struct DirichletPlan {
  std::vector<double> ks;      // strictly increasing fractional indices
  std::vector<double> shapes;  // increments, last element closes at n+1
  std::vector<int> slot;       // per planned index, position in ks
};

DirichletPlan make_dirichlet_plan(int n, const std::vector<const std::vector<double>*>& lists,
                                  const std::vector<char>& active,
                                  const std::vector<int>& js) {
  DirichletPlan dp;
  std::vector<double> all;
  for (int j : js) {
    for (const auto* v : lists) {
      const double k = (*v)[static_cast<size_t>(j - 1)];
      if (k > 0.0) all.push_back(k);
    }
  }
  (void)active;
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end(),
                        [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
            all.end());
  dp.ks = all;
  dp.shapes.reserve(all.size() + 1);
  double prev = 0.0;
  for (double k : all) {
    dp.shapes.push_back(std::max(k - prev, 1e-12));
    prev = k;
  }
  dp.shapes.push_back(std::max(n + 1.0 - prev, 1e-12));
  return dp;
}

int slot_of(const DirichletPlan& dp, double k) {
  auto it = std::lower_bound(dp.ks.begin(), dp.ks.end(), k - 1e-12);
  return static_cast<int>(it - dp.ks.begin());
}

struct CalibContext {
  int n_x, n_y;
  std::vector<double> taus;
  Sides sides;
  double alpha;
  long long draws;
  std::uint64_t seed;
};

// Coverage of the joint event at pointwise level lambda over the active
// set; common random numbers across trial levels.
double simulated_coverage(const CalibContext& cc, double lambda, const std::vector<int>& js) {
  const IndexPlan pl = build_indices(cc.n_x, cc.n_y, cc.taus, lambda, cc.sides);
  if (!pl.feasible) return -1.0;
  std::vector<const std::vector<double>*> xlists{&pl.x_low, &pl.x_high};
  std::vector<const std::vector<double>*> ylists{&pl.y_low, &pl.y_high};
  const DirichletPlan dx = make_dirichlet_plan(cc.n_x, xlists, {}, js);
  const DirichletPlan dy = make_dirichlet_plan(cc.n_y, ylists, {}, js);

  RngStream rng(cc.seed, 0xCA11B);
  long long ok = 0;
  std::vector<double> gx, gy, cumx, cumy;
  for (long long rep = 0; rep < cc.draws; ++rep) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
    gx = sample_dirichlet(dx.shapes, r);
    gy = sample_dirichlet(dy.shapes, r);
    cumx.assign(dx.ks.size(), 0.0);
    double acc = 0.0;
    for (size_t i = 0; i < dx.ks.size(); ++i) {
      acc += gx[i];
      cumx[i] = acc;
    }
    cumy.assign(dy.ks.size(), 0.0);
    acc = 0.0;
    for (size_t i = 0; i < dy.ks.size(); ++i) {
      acc += gy[i];
      cumy[i] = acc;
    }
    bool covered = true;
    for (int j : js) {
      const size_t jj = static_cast<size_t>(j - 1);
      if (cc.sides == Sides::two_sided) {
        const double dxl = cumx[static_cast<size_t>(slot_of(dx, pl.x_low[jj]))];
        const double dxh = cumx[static_cast<size_t>(slot_of(dx, pl.x_high[jj]))];
        const double dyl = cumy[static_cast<size_t>(slot_of(dy, pl.y_low[jj]))];
        const double dyh = cumy[static_cast<size_t>(slot_of(dy, pl.y_high[jj]))];
        if (!(dxl < dyh && dyl < dxh)) {
          covered = false;
          break;
        }
      } else if (cc.sides == Sides::upper) {
        const double dyh = cumy[static_cast<size_t>(slot_of(dy, pl.y_high[jj]))];
        const double dxl = cumx[static_cast<size_t>(slot_of(dx, pl.x_low[jj]))];
        if (!(dyh > dxl)) {
          covered = false;
          break;
        }
      } else {
        const double dyl = cumy[static_cast<size_t>(slot_of(dy, pl.y_low[jj]))];
        const double dxh = cumx[static_cast<size_t>(slot_of(dx, pl.x_high[jj]))];
        if (!(dyl < dxh)) {
          covered = false;
          break;
        }
      }
    }
    ok += covered ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(cc.draws);
}

// Calibrated pointwise level for the active set; negative values flag a
// coverage shortfall (the joint target is unattainable even at the widest
// feasible intervals, which can happen for one-sided tasks in very small
// samples; the caller proceeds at the feasibility edge and reports it).
double calibrate_level(const CalibContext& cc, const std::vector<int>& js,
                       QuantileCalibCache* cache) {
  std::uint64_t key = 0;
  for (int j : js) key |= 1ULL << (j - 1);
  double cached;
  if (cache && cache->get(key, cached)) return cached;

  const double target = 1.0 - cc.alpha;
  const double tol = std::max(5e-4, 1.0 / std::sqrt(static_cast<double>(cc.draws)));
  // find a feasible lower bound for the level first
  double lo = 1e-7;
  double cov_lo = simulated_coverage(cc, lo, js);
  for (int guard = 0; guard < 60 && cov_lo < 0.0; ++guard) {
    lo *= 1.6;
    if (lo > 0.45) {
      throw std::invalid_argument("quantile task: indices leave the sample range");
    }
    cov_lo = simulated_coverage(cc, lo, js);
  }
  double result;
  if (cov_lo < target) {
    result = -lo;  // shortfall: run at the widest feasible intervals
  } else {
    double hi = 0.45, mid = lo;
    double cov_hi = simulated_coverage(cc, hi, js);
    if (cov_hi < 0.0) {
      while (hi > lo * 1.01) {
        hi *= 0.7;
        cov_hi = simulated_coverage(cc, hi, js);
        if (cov_hi >= 0.0) break;
      }
    }
    if (cov_hi >= target) {
      mid = hi;
    } else {
      for (int it = 0; it < 60; ++it) {
        mid = 0.5 * (lo + hi);
        const double cov = simulated_coverage(cc, mid, js);
        if (cov < 0.0) {
          hi = mid;
          continue;
        }
        if (std::fabs(cov - target) <= tol) break;
        if (cov > target) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
    }
    result = mid;
  }
  if (cache) cache->put(key, result);
  return result;
}

std::vector<QuantileCi> build_cis(const Sample& x, const Sample& y,
                                  const std::vector<double>& taus, double lambda,
                                  Sides sides) {
  const IndexPlan pl = build_indices(x.n(), y.n(), taus, lambda, sides);
  if (!pl.feasible) {
    throw std::invalid_argument("quantile task: fractional indices leave [1, n]");
  }
  std::vector<QuantileCi> cis(taus.size());
  for (size_t j = 0; j < taus.size(); ++j) {
    QuantileCi ci;
    ci.tau = taus[j];
    if (sides == Sides::two_sided) {
      ci.delta_lo = frac_order_stat(y.sorted(), pl.y_low[j]) -
                    frac_order_stat(x.sorted(), pl.x_high[j]);
      ci.delta_hi = frac_order_stat(y.sorted(), pl.y_high[j]) -
                    frac_order_stat(x.sorted(), pl.x_low[j]);
    } else if (sides == Sides::upper) {
      ci.delta_hi = frac_order_stat(y.sorted(), pl.y_high[j]) -
                    frac_order_stat(x.sorted(), pl.x_low[j]);
      ci.delta_lo = -std::numeric_limits<double>::infinity();
    } else {
      ci.delta_lo = frac_order_stat(y.sorted(), pl.y_low[j]) -
                    frac_order_stat(x.sorted(), pl.x_high[j]);
      ci.delta_hi = std::numeric_limits<double>::infinity();
    }
    ci.rejected = ci.delta_lo > 0.0 || ci.delta_hi < 0.0;
    cis[j] = ci;
  }
  return cis;
}

QuantileTaskResult run_task(const Sample& x, const Sample& y, double alpha, Sides sides,
                            const QuantileTaskOptions& opt, QuantileCalibCache* cache,
                            bool iterate, std::vector<int> initial_js,
                            int pretest_rejections) {
  const int m = opt.m_count > 0 ? opt.m_count : default_m(x.n(), y.n());
  std::vector<double> taus(static_cast<size_t>(m));
  for (int j = 1; j <= m; ++j) {
    taus[static_cast<size_t>(j - 1)] = static_cast<double>(j) / (m + 1.0);
  }
  CalibContext cc{x.n(), y.n(), taus, sides, alpha, opt.calib_draws, opt.seed};

  std::vector<int> active = initial_js;
  QuantileTaskResult res;
  res.pretest_rejections = pretest_rejections;
  QuantileCalibCache local;
  QuantileCalibCache* cc_cache = cache ? cache : &local;

  std::vector<char> rejected(static_cast<size_t>(m + 1), 0);
  res.cis.assign(taus.size(), {});
  for (size_t j = 0; j < taus.size(); ++j) res.cis[j].tau = taus[j];

  for (int it = 0; it <= opt.max_iterations; ++it) {
    if (active.empty()) break;
    double lambda = calibrate_level(cc, active, cc_cache);
    if (lambda < 0.0) {
      lambda = -lambda;
      res.coverage_shortfall = true;
    }
    res.tilde_alpha_final = lambda;
    const auto cis = build_cis(x, y, taus, lambda, sides);
    int new_rej = 0;
    for (int j : active) {
      res.cis[static_cast<size_t>(j - 1)] = cis[static_cast<size_t>(j - 1)];
      if (cis[static_cast<size_t>(j - 1)].rejected && !rejected[static_cast<size_t>(j)]) {
        rejected[static_cast<size_t>(j)] = 1;
        ++new_rej;
      }
    }
    res.iterations = it + 1;
    if (new_rej == 0 || !iterate) break;
    std::erase_if(active, [&](int j) { return rejected[static_cast<size_t>(j)] != 0; });
  }

  for (int j = 1; j <= m; ++j) {
    if (!rejected[static_cast<size_t>(j)]) continue;
    res.rejected_js.push_back(j);
    RejectionInterval iv;
    const auto& ci = res.cis[static_cast<size_t>(j - 1)];
    iv.side = ci.delta_lo > 0.0 ? Side::below : Side::above;
    iv.tau_lo = iv.tau_hi = taus[static_cast<size_t>(j - 1)];
    iv.r_lo = iv.r_hi = std::numeric_limits<double>::quiet_NaN();
    iv.witness = j;
    res.rejections.intervals.push_back(iv);
  }
  return res;
}

}  // namespace

QuantileTaskResult joint_quantile_ci_2s(const Sample& x, const Sample& y, double alpha,
                                        Sides sides, const QuantileTaskOptions& opt,
                                        QuantileCalibCache* cache) {
  const int m = opt.m_count > 0 ? opt.m_count : default_m(x.n(), y.n());
  std::vector<int> all(static_cast<size_t>(m));
  for (int j = 1; j <= m; ++j) all[static_cast<size_t>(j - 1)] = j;
  return run_task(x, y, alpha, sides, opt, cache, false, all, 0);
}

QuantileTaskResult stepdown_2s(const Sample& x, const Sample& y, double alpha, Sides sides,
                               const QuantileTaskOptions& opt, QuantileCalibCache* cache) {
  const int m = opt.m_count > 0 ? opt.m_count : default_m(x.n(), y.n());
  std::vector<int> all(static_cast<size_t>(m));
  for (int j = 1; j <= m; ++j) all[static_cast<size_t>(j - 1)] = j;
  return run_task(x, y, alpha, sides, opt, cache, true, all, 0);
}

QuantileTaskResult pretest_then_stepdown_2s(const Sample& x, const Sample& y, double alpha,
                                            Sides sides, const QuantileTaskOptions& opt,
                                            QuantileCalibCache* cache,
                                            QuantileCalibCache* pretest_cache) {
  if (sides == Sides::two_sided) {
    throw std::invalid_argument("pretest_then_stepdown_2s: one-sided tasks only");
  }
  const double alpha_p = alpha / std::log(std::log(std::max(std::min(x.n(), y.n()), 15)));
  const Sides reversed = sides == Sides::lower ? Sides::upper : Sides::lower;
  const auto pre = joint_quantile_ci_2s(x, y, alpha_p, reversed, opt, pretest_cache);

  const int m = opt.m_count > 0 ? opt.m_count : default_m(x.n(), y.n());
  std::vector<int> survivors;
  for (int j = 1; j <= m; ++j) {
    if (std::find(pre.rejected_js.begin(), pre.rejected_js.end(), j) ==
        pre.rejected_js.end()) {
      survivors.push_back(j);
    }
  }
  const int pre_rej = static_cast<int>(pre.rejected_js.size());
  return run_task(x, y, alpha, sides, opt, cache, true, survivors, pre_rej);
}

}  // namespace qmt
