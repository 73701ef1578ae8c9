#include "qmt/stepdown1.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qmt/sampling.hpp"
#include "qmt/special.hpp"

namespace qmt {

std::string trace_to_json(const std::vector<StepTrace>& trace) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trace) {
    arr.push_back({{"iteration", t.iteration},
                   {"active_lower", t.active_lower},
                   {"active_upper", t.active_upper},
                   {"moves", t.moves},
                   {"new_rejections", t.new_rejections},
                   {"assignment_digest", t.assignment_digest}});
  }
  return arr.dump();
}

struct StepdownEngine::Impl {
  QuantileGrid grid;
  Sides sides = Sides::two_sided;
  double alpha = 0.0;
  StepdownOptions opt;
  int n = 0;
  long long M = 0;
  long long min_sat = 0;
  // column-major draw matrix: col j0 holds order statistic j0+1 across draws
  std::vector<double> cols;
  // lowC[k-1][j-1] = #draws with U_{n:j} < ell_k, for j = 1..k
  std::vector<std::vector<int>> lowC;
  // upC[k-1][j-k] = #draws with U_{n:j} > u_k, for j = k..n
  std::vector<std::vector<int>> upC;

  const double* col(int j) const {  // 1-based order-statistic index
    return cols.data() + static_cast<size_t>(j - 1) * static_cast<size_t>(M);
  }
};

StepdownEngine::~StepdownEngine() = default;
StepdownEngine::StepdownEngine(StepdownEngine&&) noexcept = default;
const QuantileGrid& StepdownEngine::grid() const { return impl_->grid; }
Sides StepdownEngine::sides() const { return impl_->sides; }

StepdownEngine::StepdownEngine(const QuantileGrid& grid, Sides sides, double alpha,
                               const StepdownOptions& opt)
    : impl_(std::make_unique<Impl>()) {
  auto& im = *impl_;
  im.grid = grid;
  im.sides = sides;
  im.alpha = alpha;
  im.opt = opt;
  im.n = grid.n;
  // keep the draw matrix bounded; the constraint tolerance degrades
  // gracefully with fewer draws
  im.M = std::min<long long>(opt.draws, std::max<long long>(2000, 100000000 / grid.n));
  im.min_sat = static_cast<long long>(
      std::ceil((1.0 - alpha) * static_cast<double>(im.M) - 1e-9));

  const int n = im.n;
  const long long M = im.M;
  im.cols.resize(static_cast<size_t>(n) * static_cast<size_t>(M));
  std::vector<long long> hist_low, hist_up;
  const bool use_low = sides != Sides::upper;
  const bool use_up = sides != Sides::lower;
  std::vector<std::vector<long long>> hists_low(use_low ? n : 0),
      hists_up(use_up ? n : 0);
  for (auto& h : hists_low) h.assign(static_cast<size_t>(n + 1), 0);
  for (auto& h : hists_up) h.assign(static_cast<size_t>(n + 1), 0);

  RngStream rng(opt.seed, 0xd1ce);
  std::vector<double> row;
  for (long long m = 0; m < M; ++m) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(m));
    sample_uniform_order_stats(n, r, row);
    for (int j = 0; j < n; ++j) {
      im.cols[static_cast<size_t>(j) * M + m] = row[static_cast<size_t>(j)];
    }
    if (use_low) {
      for (int k = 1; k <= n; ++k) {
        const double lk = grid.ell[static_cast<size_t>(k - 1)];
        const auto c = std::lower_bound(row.begin(), row.end(), lk) - row.begin();
        ++hists_low[static_cast<size_t>(k - 1)][static_cast<size_t>(c)];
      }
    }
    if (use_up) {
      for (int k = 1; k <= n; ++k) {
        const double uk = grid.u[static_cast<size_t>(k - 1)];
        const auto c = std::upper_bound(row.begin(), row.end(), uk) - row.begin();
        ++hists_up[static_cast<size_t>(k - 1)][static_cast<size_t>(c)];
      }
    }
  }
  if (use_low) {
    im.lowC.resize(static_cast<size_t>(n));
    for (int k = 1; k <= n; ++k) {
      auto& out = im.lowC[static_cast<size_t>(k - 1)];
      out.assign(static_cast<size_t>(k), 0);
      const auto& h = hists_low[static_cast<size_t>(k - 1)];
      // C_k(j) = #draws whose count of entries below ell_k is >= j
      long long suffix = 0;
      std::vector<long long> cum(static_cast<size_t>(n + 2), 0);
      for (int v = n; v >= 0; --v) {
        suffix += h[static_cast<size_t>(v)];
        cum[static_cast<size_t>(v)] = suffix;
      }
      for (int j = 1; j <= k; ++j) {
        out[static_cast<size_t>(j - 1)] = static_cast<int>(cum[static_cast<size_t>(j)]);
      }
    }
  }
  if (use_up) {
    im.upC.resize(static_cast<size_t>(n));
    for (int k = 1; k <= n; ++k) {
      auto& out = im.upC[static_cast<size_t>(k - 1)];
      out.assign(static_cast<size_t>(n - k + 1), 0);
      const auto& h = hists_up[static_cast<size_t>(k - 1)];
      // D_k(j) = #draws whose count of entries at or below u_k is < j
      long long prefix = 0;
      std::vector<long long> cum(static_cast<size_t>(n + 2), 0);
      for (int v = 0; v <= n; ++v) {
        cum[static_cast<size_t>(v)] = prefix;
        prefix += h[static_cast<size_t>(v)];
      }
      for (int j = k; j <= n; ++j) {
        out[static_cast<size_t>(j - k)] = static_cast<int>(cum[static_cast<size_t>(j)]);
      }
    }
  }
}

namespace {

struct Candidate {
  bool lower = true;
  int k = 0;        // hypothesis index
  int new_pos = 0;  // order statistic it would move to
  long long viol_in_s = 0;
  int gain = 0;
  bool valid = false;
};

std::uint64_t digest(const std::vector<int>& a, const std::vector<int>& b) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](int v) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e37;
    h *= 1099511628211ULL;
  };
  for (int v : a) mix(v);
  for (int v : b) mix(v);
  return h;
}

}  // namespace

StepdownResult StepdownEngine::run(const std::vector<double>& f0x,
                                   std::vector<int> roster_lower,
                                   std::vector<int> roster_upper,
                                   bool initial_greedy) const {
  const auto& im = *impl_;
  const int n = im.n;
  const long long M = im.M;
  if (static_cast<int>(f0x.size()) != n) {
    throw std::invalid_argument("StepdownEngine::run: f0x size mismatch");
  }
  if (im.sides == Sides::lower) roster_upper.clear();
  if (im.sides == Sides::upper) roster_lower.clear();

  StepdownResult res;
  res.r_lower.assign(static_cast<size_t>(n + 1), 0);
  res.r_upper.assign(static_cast<size_t>(n + 1), 0);
  for (int k : roster_lower) res.r_lower[static_cast<size_t>(k)] = k;
  for (int k : roster_upper) res.r_upper[static_cast<size_t>(k)] = k;

  std::vector<std::uint16_t> viol(static_cast<size_t>(M));
  std::vector<int> S;
  S.reserve(static_cast<size_t>(M));

  auto rebuild_satisfied = [&]() {
    std::fill(viol.begin(), viol.end(), 0);
    for (int k : roster_lower) {
      const double lk = im.grid.ell[static_cast<size_t>(k - 1)];
      const double* c = im.col(res.r_lower[static_cast<size_t>(k)]);
      for (long long m = 0; m < M; ++m) viol[static_cast<size_t>(m)] += c[m] < lk;
    }
    for (int k : roster_upper) {
      const double uk = im.grid.u[static_cast<size_t>(k - 1)];
      const double* c = im.col(res.r_upper[static_cast<size_t>(k)]);
      for (long long m = 0; m < M; ++m) viol[static_cast<size_t>(m)] += c[m] > uk;
    }
    S.clear();
    for (long long m = 0; m < M; ++m) {
      if (viol[static_cast<size_t>(m)] == 0) S.push_back(static_cast<int>(m));
    }
  };

  auto cand_violations = [&](const Candidate& c) {
    long long v = 0;
    if (c.lower) {
      const double lk = im.grid.ell[static_cast<size_t>(c.k - 1)];
      const double* col = im.col(c.new_pos);
      for (int m : S) v += col[m] < lk;
    } else {
      const double uk = im.grid.u[static_cast<size_t>(c.k - 1)];
      const double* col = im.col(c.new_pos);
      for (int m : S) v += col[m] > uk;
    }
    return v;
  };

  auto greedy = [&]() {
    std::vector<Candidate> cands;
    auto add_candidate = [&](bool lower, int k) {
      Candidate c;
      c.lower = lower;
      c.k = k;
      const int cur = lower ? res.r_lower[static_cast<size_t>(k)]
                            : res.r_upper[static_cast<size_t>(k)];
      c.new_pos = lower ? cur - 1 : cur + 1;
      if (c.new_pos < 1 || c.new_pos > n) return;
      const auto& table = lower ? im.lowC[static_cast<size_t>(k - 1)]
                                : im.upC[static_cast<size_t>(k - 1)];
      const int cur_idx = lower ? cur - 1 : cur - k;
      const int new_idx = lower ? c.new_pos - 1 : c.new_pos - k;
      c.gain = table[static_cast<size_t>(new_idx)] - table[static_cast<size_t>(cur_idx)];
      c.viol_in_s = cand_violations(c);
      c.valid = true;
      cands.push_back(c);
    };
    for (int k : roster_lower) add_candidate(true, k);
    for (int k : roster_upper) add_candidate(false, k);

    int moves = 0;
    std::vector<int> removed;
    for (;;) {
      // best admissible move: largest pointwise gain, ties to the
      // smallest k with the lower list first
      int best = -1;
      for (size_t c = 0; c < cands.size(); ++c) {
        const auto& cd = cands[c];
        if (!cd.valid) continue;
        if (static_cast<long long>(S.size()) - cd.viol_in_s < im.min_sat) continue;
        if (best < 0) {
          best = static_cast<int>(c);
          continue;
        }
        const auto& bb = cands[static_cast<size_t>(best)];
        if (cd.gain > bb.gain ||
            (cd.gain == bb.gain &&
             (cd.k < bb.k || (cd.k == bb.k && cd.lower && !bb.lower)))) {
          best = static_cast<int>(c);
        }
      }
      if (best < 0) break;
      auto& cb = cands[static_cast<size_t>(best)];

      // commit: remove the draws the move newly violates
      removed.clear();
      {
        const double bound = cb.lower ? im.grid.ell[static_cast<size_t>(cb.k - 1)]
                                      : im.grid.u[static_cast<size_t>(cb.k - 1)];
        const double* col = im.col(cb.new_pos);
        size_t keep = 0;
        for (size_t idx = 0; idx < S.size(); ++idx) {
          const int m = S[idx];
          const bool bad = cb.lower ? col[m] < bound : col[m] > bound;
          if (bad) {
            removed.push_back(m);
          } else {
            S[keep++] = m;
          }
        }
        S.resize(keep);
      }
      if (cb.lower) {
        res.r_lower[static_cast<size_t>(cb.k)] = cb.new_pos;
      } else {
        res.r_upper[static_cast<size_t>(cb.k)] = cb.new_pos;
      }
      ++moves;

      // other candidates lose only draws in `removed`
      for (auto& cd : cands) {
        if (!cd.valid || (&cd == &cb)) continue;
        if (removed.empty()) break;
        long long drop = 0;
        const double bound = cd.lower ? im.grid.ell[static_cast<size_t>(cd.k - 1)]
                                      : im.grid.u[static_cast<size_t>(cd.k - 1)];
        const double* col = im.col(cd.new_pos);
        for (int m : removed) drop += cd.lower ? (col[m] < bound) : (col[m] > bound);
        cd.viol_in_s -= drop;
      }
      // the committed hypothesis gets a fresh candidate one step further
      cb.new_pos = cb.lower ? cb.new_pos - 1 : cb.new_pos + 1;
      if (cb.new_pos < 1 || cb.new_pos > n) {
        cb.valid = false;
      } else {
        const auto& table = cb.lower ? im.lowC[static_cast<size_t>(cb.k - 1)]
                                     : im.upC[static_cast<size_t>(cb.k - 1)];
        const int cur = cb.lower ? res.r_lower[static_cast<size_t>(cb.k)]
                                 : res.r_upper[static_cast<size_t>(cb.k)];
        const int cur_idx = cb.lower ? cur - 1 : cur - cb.k;
        const int new_idx = cb.lower ? cb.new_pos - 1 : cb.new_pos - cb.k;
        cb.gain =
            table[static_cast<size_t>(new_idx)] - table[static_cast<size_t>(cur_idx)];
        cb.viol_in_s = cand_violations(cb);
      }
    }
    return moves;
  };

  std::vector<char> rejected_low(static_cast<size_t>(n + 1), 0);
  std::vector<char> rejected_up(static_cast<size_t>(n + 1), 0);

  for (int it = 0; it <= im.opt.max_iterations; ++it) {
    rebuild_satisfied();
    int moves = 0;
    if (it > 0 || initial_greedy) moves = greedy();

    int new_rej = 0;
    // lower roster: sweep from the top, tracking the most extreme
    // assigned statistic seen so far
    {
      double runmin = std::numeric_limits<double>::infinity();
      int argmin = 0;
      for (auto itk = roster_lower.rbegin(); itk != roster_lower.rend(); ++itk) {
        const int k = *itk;
        const int r = res.r_lower[static_cast<size_t>(k)];
        if (f0x[static_cast<size_t>(r - 1)] < runmin) {
          runmin = f0x[static_cast<size_t>(r - 1)];
          argmin = r;
        }
        const double lk = im.grid.ell[static_cast<size_t>(k - 1)];
        if (runmin < lk) {
          res.raw.push_back({Side::below, runmin, lk, k, argmin});
          if (!rejected_low[static_cast<size_t>(k)]) {
            rejected_low[static_cast<size_t>(k)] = 1;
            ++new_rej;
          }
        }
      }
    }
    {
      double runmax = -std::numeric_limits<double>::infinity();
      int argmax = 0;
      for (int k : roster_upper) {
        const int r = res.r_upper[static_cast<size_t>(k)];
        if (f0x[static_cast<size_t>(r - 1)] > runmax) {
          runmax = f0x[static_cast<size_t>(r - 1)];
          argmax = r;
        }
        const double uk = im.grid.u[static_cast<size_t>(k - 1)];
        if (runmax > uk) {
          res.raw.push_back({Side::above, uk, runmax, k, argmax});
          if (!rejected_up[static_cast<size_t>(k)]) {
            rejected_up[static_cast<size_t>(k)] = 1;
            ++new_rej;
          }
        }
      }
    }

    res.trace.push_back({it, static_cast<int>(roster_lower.size()),
                         static_cast<int>(roster_upper.size()), moves, new_rej,
                         digest(res.r_lower, res.r_upper)});
    if (new_rej == 0) break;

    std::erase_if(roster_lower,
                  [&](int k) { return rejected_low[static_cast<size_t>(k)] != 0; });
    std::erase_if(roster_upper,
                  [&](int k) { return rejected_up[static_cast<size_t>(k)] != 0; });
    if (roster_lower.empty() && roster_upper.empty()) break;
  }
  return res;
}

namespace {

RejectionSet intervals_from_raw(const std::vector<TauInterval>& raw,
                                const std::vector<double>& x_sorted,
                                const NullModel& null) {
  std::vector<RejectionInterval> ivs;
  for (const auto& t : raw) {
    if (!(t.hi > t.lo)) continue;
    RejectionInterval iv;
    iv.side = t.side;
    iv.tau_lo = t.lo;
    iv.tau_hi = t.hi;
    iv.witness = t.hypothesis;
    if (t.side == Side::below) {
      iv.r_lo = x_sorted[static_cast<size_t>(t.statistic - 1)];
      iv.r_hi = null.quantile(t.hi);
    } else {
      iv.r_lo = null.quantile(t.lo);
      iv.r_hi = x_sorted[static_cast<size_t>(t.statistic - 1)];
    }
    ivs.push_back(iv);
  }
  RejectionSet out;
  out.intervals = merge_intervals(std::move(ivs));
  return out;
}

std::vector<double> eval_cdf(const NullModel& null, const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = null.cdf(xs[i]);
  return out;
}

std::vector<int> full_roster(int n) {
  std::vector<int> r(static_cast<size_t>(n));
  for (int k = 1; k <= n; ++k) r[static_cast<size_t>(k - 1)] = k;
  return r;
}

}  // namespace

StepdownResult stepdown_1s(const Sample& sample, const NullModel& null,
                           const Calibration& calib, const StepdownOptions& opt) {
  const int n = sample.n();
  const QuantileGrid grid = build_grid(n, calib);
  StepdownEngine engine(grid, calib.sides, calib.alpha, opt);
  const auto f0x = eval_cdf(null, sample.sorted());
  auto res = engine.run(f0x, full_roster(n), full_roster(n), false);
  res.rejections = intervals_from_raw(res.raw, sample.sorted(), null);
  return res;
}

PretestPlan plan_pretest(const QuantileGrid& main_grid, Sides main_sides, double alpha_p,
                         const StepdownOptions& opt) {
  if (main_sides == Sides::two_sided) {
    throw std::invalid_argument("plan_pretest: the screen applies to one-sided procedures");
  }
  if (!(alpha_p > 0.0 && alpha_p < 0.5)) {
    throw std::invalid_argument("plan_pretest: alpha_p outside (0, 0.5)");
  }
  const int n = main_grid.n;
  const bool lower_main = main_sides == Sides::lower;
  const auto& hyp = lower_main ? main_grid.ell : main_grid.u;

  const long long M = std::min<long long>(opt.draws, std::max<long long>(2000, 100000000 / n));
  // fixed draw set, reused across all bisection trials
  std::vector<std::vector<double>> draws(static_cast<size_t>(M));
  {
    RngStream rng(opt.seed, 0x9f2e);
    for (long long m = 0; m < M; ++m) {
      RngStream r = rng.substream(static_cast<std::uint64_t>(m));
      sample_uniform_order_stats(n, r, draws[static_cast<size_t>(m)]);
    }
  }

  // assignment for a trial level: thresholds are the opposite-tail beta
  // quantiles; each hypothesis is screened by the most aggressive order
  // statistic whose pointwise size stays within the trial level
  std::vector<double> thr(static_cast<size_t>(n));
  std::vector<int> assign(static_cast<size_t>(n + 1), 0);
  int boundary = 0;
  auto build_assignment = [&](double lambda) {
    boundary = 0;
    std::fill(assign.begin(), assign.end(), 0);
    for (int k = 1; k <= n; ++k) {
      const BetaParams p{static_cast<double>(k), static_cast<double>(n + 1 - k)};
      thr[static_cast<size_t>(k - 1)] =
          lower_main ? beta_quantile(p, 1.0 - lambda) : beta_quantile(p, lambda);
    }
    if (lower_main) {
      // boundary = first k with ell_k >= thr_1; r_k = max{k': thr_{k'} <= ell_k}
      int r = 0;
      for (int k = 1; k <= n; ++k) {
        while (r < n && thr[static_cast<size_t>(r)] <= hyp[static_cast<size_t>(k - 1)]) ++r;
        if (r >= 1) {
          if (boundary == 0) boundary = k;
          assign[static_cast<size_t>(k)] = r;
        }
      }
    } else {
      // boundary = last k with u_k <= thr_n; r_k = min{k': thr_{k'} >= u_k}
      int r = n + 1;
      for (int k = n; k >= 1; --k) {
        while (r > 1 && thr[static_cast<size_t>(r - 2)] >= hyp[static_cast<size_t>(k - 1)]) --r;
        if (r <= n) {
          boundary = boundary == 0 ? k : std::max(boundary, k);
          assign[static_cast<size_t>(k)] = r;
        }
      }
    }
  };

  auto simulated_level = [&](double lambda) {
    build_assignment(lambda);
    long long hits = 0;
    for (long long m = 0; m < M; ++m) {
      const auto& row = draws[static_cast<size_t>(m)];
      bool any = false;
      if (lower_main) {
        for (int k = boundary; k >= 1 && k <= n && boundary > 0; ++k) {
          const int r = assign[static_cast<size_t>(k)];
          if (r == 0) continue;
          if (row[static_cast<size_t>(r - 1)] > hyp[static_cast<size_t>(k - 1)]) {
            any = true;
            break;
          }
        }
      } else if (boundary > 0) {
        for (int k = 1; k <= boundary; ++k) {
          const int r = assign[static_cast<size_t>(k)];
          if (r == 0) continue;
          if (row[static_cast<size_t>(r - 1)] < hyp[static_cast<size_t>(k - 1)]) {
            any = true;
            break;
          }
        }
      }
      hits += any ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(M);
  };

  double lo = 1e-9, hi = 0.49999;
  PretestPlan plan;
  plan.alpha_p = alpha_p;
  plan.main_sides = main_sides;
  if (simulated_level(hi) < alpha_p) {
    // the screen cannot spend that much level at this n; run it maximally
    plan.tilde_alpha_p = hi;
    build_assignment(hi);
  } else {
    const double tol =
        std::max(0.01 * alpha_p, 0.7 * std::sqrt(alpha_p * (1.0 - alpha_p) /
                                                 static_cast<double>(M)));
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
      mid = 0.5 * (lo + hi);
      const double a = simulated_level(mid);
      if (std::fabs(a - alpha_p) <= tol) break;
      if (a < alpha_p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    plan.tilde_alpha_p = mid;
    build_assignment(mid);
  }
  plan.boundary_k = boundary;
  plan.assignment = assign;
  return plan;
}

PretestResult apply_pretest(const PretestPlan& plan, const QuantileGrid& main_grid,
                            const std::vector<double>& x_sorted,
                            const std::vector<double>& f0x, const NullModel& null) {
  const int n = main_grid.n;
  const bool lower_main = plan.main_sides == Sides::lower;
  const auto& hyp = lower_main ? main_grid.ell : main_grid.u;
  PretestResult out;
  out.plan = plan;
  std::vector<RejectionInterval> ivs;
  for (int k = 1; k <= n; ++k) {
    const int r = k <= static_cast<int>(plan.assignment.size()) - 1
                      ? plan.assignment[static_cast<size_t>(k)]
                      : 0;
    bool rejected = false;
    if (r != 0) {
      const double h = hyp[static_cast<size_t>(k - 1)];
      const double f = f0x[static_cast<size_t>(r - 1)];
      if (lower_main ? f > h : f < h) {
        rejected = true;
        RejectionInterval iv;
        iv.side = lower_main ? Side::above : Side::below;
        iv.tau_lo = lower_main ? h : f;
        iv.tau_hi = lower_main ? f : h;
        iv.witness = k;
        if (lower_main) {
          iv.r_lo = null.quantile(h);
          iv.r_hi = x_sorted[static_cast<size_t>(r - 1)];
        } else {
          iv.r_lo = x_sorted[static_cast<size_t>(r - 1)];
          iv.r_hi = null.quantile(h);
        }
        ivs.push_back(iv);
      }
    }
    if (!rejected) out.survivors.push_back(k);
  }
  out.rejections.intervals = merge_intervals(std::move(ivs));
  return out;
}

PretestResult pretest_1s(const Sample& sample, const NullModel& null, double alpha_p,
                         Sides main_sides, const Calibration& main_calib,
                         const StepdownOptions& opt) {
  const QuantileGrid grid = build_grid(sample.n(), main_calib);
  const PretestPlan plan = plan_pretest(grid, main_sides, alpha_p, opt);
  return apply_pretest(plan, grid, sample.sorted(), eval_cdf(null, sample.sorted()), null);
}

StepdownResult pretest_then_stepdown_1s(const Sample& sample, const NullModel& null,
                                        const Calibration& calib,
                                        const StepdownOptions& opt) {
  if (calib.sides == Sides::two_sided) {
    throw std::invalid_argument("pretest_then_stepdown_1s: one-sided procedures only");
  }
  const int n = sample.n();
  const QuantileGrid grid = build_grid(n, calib);
  const double alpha_p = default_pretest_level(calib.alpha, n);
  const PretestPlan plan = plan_pretest(grid, calib.sides, alpha_p, opt);
  const auto f0x = eval_cdf(null, sample.sorted());
  const PretestResult pre = apply_pretest(plan, grid, sample.sorted(), f0x, null);

  StepdownEngine engine(grid, calib.sides, calib.alpha, opt);
  auto res = calib.sides == Sides::lower
                 ? engine.run(f0x, pre.survivors, {}, true)
                 : engine.run(f0x, {}, pre.survivors, true);
  res.rejections = intervals_from_raw(res.raw, sample.sorted(), null);
  return res;
}

}  // namespace qmt
