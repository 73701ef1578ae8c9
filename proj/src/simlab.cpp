#include "qmt/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qmt/ks.hpp"
#include "qmt/mtp1.hpp"
#include "qmt/parallel.hpp"
#include "qmt/mtp2.hpp"
#include "qmt/quantile2.hpp"
#include "qmt/sampling.hpp"
#include "qmt/special.hpp"
#include "qmt/stepdown1.hpp"
#include "qmt/twosample_core.hpp"

namespace qmt {

Dgp Dgp::uniform(double a, double b) {
  Dgp d;
  d.quantile_ = [a, b](double tau) { return a + tau * (b - a); };
  return d;
}

Dgp Dgp::normal(double mu, double sigma) {
  Dgp d;
  d.quantile_ = [mu, sigma](double tau) { return mu + sigma * normal_quantile(tau); };
  return d;
}

Dgp Dgp::piecewise_quantile(std::vector<std::pair<double, double>> knots, bool floor_values) {
  if (knots.size() < 2) throw std::invalid_argument("piecewise_quantile: need two knots");
  std::sort(knots.begin(), knots.end());
  if (knots.front().first > 0.0 || knots.back().first < 1.0) {
    throw std::invalid_argument("piecewise_quantile: knots must cover [0, 1]");
  }
  for (size_t i = 1; i < knots.size(); ++i) {
    if (knots[i].second < knots[i - 1].second) {
      throw std::invalid_argument("piecewise_quantile: quantile values must be nondecreasing");
    }
  }
  Dgp d;
  d.quantile_ = [knots = std::move(knots), floor_values](double tau) {
    auto it = std::lower_bound(knots.begin(), knots.end(), tau,
                               [](const auto& a, double t) { return a.first < t; });
    double v;
    if (it == knots.begin()) {
      v = it->second;
    } else if (it == knots.end()) {
      v = knots.back().second;
    } else if (it->first == tau) {
      v = it->second;
    } else {
      auto prev = std::prev(it);
      const double w = (tau - prev->first) / (it->first - prev->first);
      v = prev->second + w * (it->second - prev->second);
    }
    return floor_values ? std::floor(v) : v;
  };
  return d;
}

double Dgp::quantile(double tau) const { return quantile_(tau); }

double Dgp::cdf(double r) const {
  // sup{tau : Q(tau) <= r}; handles both continuous and step quantiles
  if (quantile_(0.0) > r) return 0.0;
  if (quantile_(1.0) <= r) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (quantile_(mid) <= r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double Dgp::draw(RngStream& rng) const { return quantile_(rng.uniform()); }

const SimCell& SimReport::cell(const std::string& row, const std::string& method) const {
  for (size_t i = 0; i < row_labels.size(); ++i) {
    if (row_labels[i] != row) continue;
    for (const auto& c : rows[i]) {
      if (c.method == method) return c;
    }
  }
  throw std::out_of_range("SimReport: no cell " + row + "/" + method);
}

std::string SimReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["replications"] = replications;
  j["seed"] = seed;
  nlohmann::json arr = nlohmann::json::array();
  for (size_t i = 0; i < row_labels.size(); ++i) {
    nlohmann::json row;
    row["row"] = row_labels[i];
    for (const auto& c : rows[i]) {
      row[c.method] = {{"value", c.value}, {"stderr", c.stderr_value}};
    }
    arr.push_back(row);
  }
  j["rows"] = arr;
  return j.dump(2);
}

std::string SimReport::to_csv() const {
  std::ostringstream out;
  out << "scenario,row,method,value,stderr\n";
  char buf[256];
  for (size_t i = 0; i < row_labels.size(); ++i) {
    for (const auto& c : rows[i]) {
      std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6g,%.3g\n", scenario.c_str(),
                    row_labels[i].c_str(), c.method.c_str(), c.value, c.stderr_value);
      out << buf;
    }
  }
  return out.str();
}

namespace {

double prop_se(double p, long long R) {
  return std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(R));
}

SimCell cell_of(const std::string& m, long long hits, long long R) {
  const double p = static_cast<double>(hits) / static_cast<double>(R);
  return {m, p, prop_se(p, R)};
}

// ---------- table 1: one-sample, two-sided, null true ----------

SimReport table1(long long R, RngStream rng, int threads) {
  SimReport rep;
  rep.scenario = "table1";
  rep.replications = R;
  const double rows[4][2] = {{0.10, 20}, {0.10, 100}, {0.05, 20}, {0.05, 100}};
  for (const auto& rw : rows) {
    const double alpha = rw[0];
    const int n = static_cast<int>(rw[1]);
    const double tail = 0.5 * tilde_alpha_formula(alpha, n);
    const QuantileGrid grid = build_grid_tail(n, tail);
    const double c_asym = kolmogorov_critical(alpha);
    RngStream crit_rng = rng.substream(0xc417 + n + static_cast<int>(alpha * 1000));
    const long long crit_reps = std::min<long long>(R, 1000000);
    const double c_exact =
        ks_exact_critical_1s(n, alpha, Sides::two_sided, crit_reps, crit_rng, threads);
    const double c_w = weighted_ks_critical_1s(n, alpha, crit_reps,
                                               crit_rng.substream(1), threads);

    struct Hits {
      long long dir = 0, ks = 0, ks_exact = 0, wks = 0;
    };
    const int T = effective_threads(threads);
    std::vector<Hits> acc(static_cast<size_t>(T));
    RngStream base = rng.substream(0x7ab1e1 + n + static_cast<int>(alpha * 1000));
    parallel_for(0, T, threads, [&](long long w) {
      std::vector<double> u;
      Hits h;
      for (long long r = R * w / T; r < R * (w + 1) / T; ++r) {
        RngStream rr = base.substream(static_cast<std::uint64_t>(r));
        sample_uniform_order_stats(n, rr, u);
        bool dir = false;
        for (int k = 0; k < n; ++k) {
          if (u[static_cast<size_t>(k)] < grid.ell[static_cast<size_t>(k)] ||
              u[static_cast<size_t>(k)] > grid.u[static_cast<size_t>(k)]) {
            dir = true;
            break;
          }
        }
        const double d = ks_stat_1s(u, Sides::two_sided);
        const double wd = weighted_ks_stat_1s(u);
        h.dir += dir;
        h.ks += d > c_asym;
        h.ks_exact += d > c_exact;
        h.wks += wd > c_w;
      }
      acc[static_cast<size_t>(w)] = h;
    });
    Hits total;
    for (const auto& h : acc) {
      total.dir += h.dir;
      total.ks += h.ks;
      total.ks_exact += h.ks_exact;
      total.wks += h.wks;
    }
    char label[64];
    std::snprintf(label, sizeof label, "alpha=%.2f n=%d", alpha, n);
    rep.row_labels.push_back(label);
    rep.rows.push_back({cell_of("dirichlet", total.dir, R), cell_of("ks", total.ks, R),
                        cell_of("ks_exact", total.ks_exact, R),
                        cell_of("weighted_ks", total.wks, R)});
  }
  return rep;
}

// ---------- table 2: one-sample, one-sided, boosters ----------

struct OneSampleDgpRow {
  const char* label;
  std::vector<std::pair<double, double>> quantile_knots;  // of the true F^{-1}
  double true_tau_max;  // H0tau holds on [0, true_tau_max]
};

std::vector<OneSampleDgpRow> table2_rows() {
  return {
      {"all_equal", {{0.0, -1.0}, {1.0, 1.0}}, 1.0},
      {"equal_below_half", {{0.0, -1.0}, {0.5, 0.0}, {1.0, 2.0}}, 0.5},
      {"slack_below_half", {{0.0, -2.0}, {0.5, 0.0}, {1.0, 1.0}}, 1.0},
      {"slack_then_false", {{0.0, -2.0}, {0.5, 0.0}, {1.0, 2.0}}, 0.5},
  };
}

SimReport table2(long long R, RngStream rng, int threads) {
  SimReport rep;
  rep.scenario = "table2";
  rep.replications = R;
  const double alpha = 0.1;
  const int n = 100;
  const Calibration calib = calibrate_formula_1s(alpha, n, Sides::upper);
  const QuantileGrid grid = build_grid(n, calib);
  StepdownOptions opt;
  opt.threads = threads;
  const StepdownEngine engine(grid, Sides::upper, alpha, opt);
  const PretestPlan plan =
      plan_pretest(grid, Sides::upper, default_pretest_level(alpha, n), opt);
  const NullModel unif01 = NullModel::uniform(0.0, 1.0);
  std::vector<int> roster(static_cast<size_t>(n));
  for (int k = 1; k <= n; ++k) roster[static_cast<size_t>(k - 1)] = k;

  for (const auto& row : table2_rows()) {
    const Dgp f = Dgp::piecewise_quantile(row.quantile_knots, false);
    // g(u) = F0(F^{-1}(u)) with F0 = Unif(-1, 1)
    auto g = [&](double u) {
      return std::clamp((f.quantile(u) + 1.0) / 2.0, 0.0, 1.0);
    };
    const double tmax = row.true_tau_max;

    long long basic = 0, step = 0, prestep = 0, superset_fail = 0;
    RngStream base = rng.substream(std::hash<std::string>{}(row.label));
    std::vector<double> u, f0x(static_cast<size_t>(n));
    for (long long r = 0; r < R; ++r) {
      RngStream rr = base.substream(static_cast<std::uint64_t>(r));
      sample_uniform_order_stats(n, rr, u);
      for (int k = 0; k < n; ++k) f0x[static_cast<size_t>(k)] = g(u[static_cast<size_t>(k)]);
      std::sort(f0x.begin(), f0x.end());  // guard against flat-segment jitter

      bool basic_hit = false;
      for (int k = 0; k < n; ++k) {
        if (grid.u[static_cast<size_t>(k)] <= tmax &&
            f0x[static_cast<size_t>(k)] > grid.u[static_cast<size_t>(k)]) {
          basic_hit = true;
          break;
        }
      }
      auto any_true_rejection = [&](const StepdownResult& res) {
        for (const auto& iv : res.raw) {
          if (iv.side == Side::above && iv.lo <= tmax && iv.hi > iv.lo) return true;
        }
        return false;
      };
      const StepdownResult sd = engine.run(f0x, {}, roster, false);
      const bool step_hit = any_true_rejection(sd);
      const PretestResult pre = apply_pretest(plan, grid, f0x, f0x, unif01);
      const StepdownResult ps = engine.run(f0x, {}, pre.survivors, true);
      const bool prestep_hit = any_true_rejection(ps);

      // the boosted procedures may never drop a basic rejection
      bool basic_any = false;
      for (int k = 0; k < n; ++k) {
        if (f0x[static_cast<size_t>(k)] > grid.u[static_cast<size_t>(k)]) {
          basic_any = true;
          break;
        }
      }
      if (basic_any && sd.raw.empty()) ++superset_fail;

      basic += basic_hit;
      step += step_hit;
      prestep += prestep_hit;
    }
    rep.row_labels.push_back(row.label);
    rep.rows.push_back({cell_of("dirichlet", basic, R), cell_of("stepdown", step, R),
                        cell_of("pretest_stepdown", prestep, R),
                        cell_of("superset_failures", superset_fail, R)});
  }
  return rep;
}

// ---------- table 3: two-sample, two-sided, null true ----------

SimReport table3(long long R, RngStream rng, int threads) {
  SimReport rep;
  rep.scenario = "table3";
  rep.replications = R;
  struct Row {
    double alpha;
    int nx, ny;
  };
  const Row rows[] = {{0.05, 25, 500}, {0.10, 25, 500}, {0.10, 30, 30},
                      {0.10, 29, 30},  {0.10, 100, 100}, {0.10, 99, 100}};
  for (const auto& rw : rows) {
    RngStream calib_rng = rng.substream(0xca11 + rw.nx * 1000 + rw.ny);
    const Calibration calib =
        tilde_alpha_mc_2s(rw.alpha, rw.nx, rw.ny, Sides::two_sided,
                          TwoSampleScheme::uniform_sim, 200000, calib_rng, threads);
    const double tail = calib.tail();
    const SegmentThresholds st = SegmentThresholds::build(rw.nx, rw.ny, Sides::two_sided);
    const double c_asym = kolmogorov_critical(rw.alpha);
    const double c_exact = ks_exact_critical_2s(rw.nx, rw.ny, rw.alpha, Sides::two_sided,
                                                500000, calib_rng.substream(7), threads);

    struct Hits {
      long long dir = 0, ks = 0, ks_exact = 0;
    };
    const int T = effective_threads(threads);
    std::vector<Hits> acc(static_cast<size_t>(T));
    RngStream base = rng.substream(0x7ab1e3 + rw.nx * 1000 + rw.ny);
    parallel_for(0, T, threads, [&](long long w) {
      std::vector<std::uint8_t> pattern;
      Hits h;
      for (long long r = R * w / T; r < R * (w + 1) / T; ++r) {
        RngStream rr = base.substream(static_cast<std::uint64_t>(r));
        sample_pattern(rw.nx, rw.ny, rr, pattern);
        h.dir += st.pattern_critical(pattern) < tail;
        const double d = ks_stat_pattern_2s(pattern, rw.nx, rw.ny, Sides::two_sided);
        h.ks += d > c_asym;
        h.ks_exact += d > c_exact;
      }
      acc[static_cast<size_t>(w)] = h;
    });
    Hits total;
    for (const auto& h : acc) {
      total.dir += h.dir;
      total.ks += h.ks;
      total.ks_exact += h.ks_exact;
    }
    char label[64];
    std::snprintf(label, sizeof label, "alpha=%.2f nx=%d ny=%d", rw.alpha, rw.nx, rw.ny);
    rep.row_labels.push_back(label);
    rep.rows.push_back({cell_of("dirichlet", total.dir, R), cell_of("ks", total.ks, R),
                        cell_of("ks_exact", total.ks_exact, R)});
  }
  return rep;
}

// ---------- table 4: two-sample quantile tasks, one-sided ----------

SimReport table4(long long R, RngStream rng, int threads) {
  SimReport rep;
  rep.scenario = "table4";
  rep.replications = R;
  const double alpha = 0.05;
  const int n = 200;
  QuantileTaskOptions opt;
  opt.calib_draws = 20000;
  opt.threads = threads;
  const Dgp fy = Dgp::piecewise_quantile({{0.0, -1.0}, {1.0, 1.0}}, false);

  for (const auto& row : table2_rows()) {
    const Dgp fx = Dgp::piecewise_quantile(row.quantile_knots, false);
    const int m = std::max(1, static_cast<int>(std::floor(std::pow(n, 0.4))));
    std::vector<bool> true_j(static_cast<size_t>(m + 1), false);
    for (int j = 1; j <= m; ++j) {
      const double tj = static_cast<double>(j) / (m + 1);
      true_j[static_cast<size_t>(j)] = fx.quantile(tj) <= fy.quantile(tj) + 1e-12;
    }
    QuantileCalibCache cache, pre_cache;
    long long joint = 0, step = 0, prestep = 0;
    RngStream base = rng.substream(std::hash<std::string>{}(row.label) ^ 0x4444);
    std::vector<double> xs(static_cast<size_t>(n)), ys(static_cast<size_t>(n));
    for (long long r = 0; r < R; ++r) {
      RngStream rr = base.substream(static_cast<std::uint64_t>(r));
      for (int i = 0; i < n; ++i) xs[static_cast<size_t>(i)] = fx.quantile(rr.uniform());
      for (int i = 0; i < n; ++i) ys[static_cast<size_t>(i)] = fy.quantile(rr.uniform());
      const Sample sx(xs), sy(ys);
      auto any_true = [&](const QuantileTaskResult& res) {
        for (int j : res.rejected_js) {
          if (true_j[static_cast<size_t>(j)]) return true;
        }
        return false;
      };
      joint += any_true(joint_quantile_ci_2s(sx, sy, alpha, Sides::upper, opt, &cache));
      step += any_true(stepdown_2s(sx, sy, alpha, Sides::upper, opt, &cache));
      prestep += any_true(
          pretest_then_stepdown_2s(sx, sy, alpha, Sides::upper, opt, &cache, &pre_cache));
    }
    rep.row_labels.push_back(row.label);
    rep.rows.push_back({cell_of("joint", joint, R), cell_of("stepdown", step, R),
                        cell_of("pretest_stepdown", prestep, R)});
  }
  return rep;
}

}  // namespace

SimReport run_fwer_table(const std::string& scenario, long long R, RngStream rng,
                         int threads) {
  if (R < 1) throw std::invalid_argument("run_fwer_table: need at least one replication");
  if (scenario == "table1") return table1(R, rng, threads);
  if (scenario == "table2") return table2(R, rng, threads);
  if (scenario == "table3") return table3(R, rng, threads);
  if (scenario == "table4") return table4(R, rng, threads);
  throw std::invalid_argument("run_fwer_table: unknown scenario " + scenario);
}

double RpCurve::stderr_at(size_t k) const {
  return std::sqrt(std::max(rp[k] * (1.0 - rp[k]), 1e-12) /
                   static_cast<double>(replications));
}

std::string RpCurve::to_csv() const {
  std::ostringstream out;
  out << "k,rp,stderr\n";
  char buf[96];
  for (size_t k = 0; k < rp.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.3g\n", k + 1, rp[k], stderr_at(k));
    out << buf;
  }
  return out.str();
}

RpCurve run_pointwise_rp(const std::string& method, int n, double alpha, long long R,
                         RngStream rng, int threads) {
  RpCurve curve;
  curve.method = method;
  curve.n = n;
  curve.alpha = alpha;
  curve.replications = R;

  std::vector<long long> hits(static_cast<size_t>(n), 0);
  if (method == "dirichlet" || method == "dirichlet2") {
    const bool one_sided = method == "dirichlet";
    const Calibration calib =
        calibrate_formula_1s(alpha, n, one_sided ? Sides::lower : Sides::two_sided);
    const QuantileGrid grid = build_grid(n, calib);
    RngStream base = rng.substream(0x99);
    const int T = effective_threads(threads);
    std::vector<std::vector<long long>> acc(static_cast<size_t>(T),
                                            std::vector<long long>(static_cast<size_t>(n), 0));
    parallel_for(0, T, threads, [&](long long w) {
      std::vector<double> u;
      auto& mine = acc[static_cast<size_t>(w)];
      for (long long r = R * w / T; r < R * (w + 1) / T; ++r) {
        RngStream rr = base.substream(static_cast<std::uint64_t>(r));
        sample_uniform_order_stats(n, rr, u);
        for (int k = 0; k < n; ++k) {
          bool hit = u[static_cast<size_t>(k)] < grid.ell[static_cast<size_t>(k)];
          if (!one_sided) {
            hit = hit || u[static_cast<size_t>(k)] > grid.u[static_cast<size_t>(k)];
          }
          mine[static_cast<size_t>(k)] += hit;
        }
      }
    });
    for (const auto& a : acc) {
      for (int k = 0; k < n; ++k) hits[static_cast<size_t>(k)] += a[static_cast<size_t>(k)];
    }
  } else if (method == "ks" || method == "weighted_ks") {
    const bool weighted = method == "weighted_ks";
    RngStream crit_rng = rng.substream(0xc0de);
    const long long crit_reps = std::min<long long>(std::max<long long>(R, 200000), 1000000);
    const double c = weighted
                         ? weighted_ks_critical_1s(n, alpha, crit_reps, crit_rng, threads)
                         : ks_exact_critical_1s(n, alpha, Sides::two_sided, crit_reps,
                                                crit_rng, threads);
    RngStream base = rng.substream(0x9a);
    const int T = effective_threads(threads);
    std::vector<std::vector<long long>> acc(static_cast<size_t>(T),
                                            std::vector<long long>(static_cast<size_t>(n), 0));
    const double scale = std::sqrt(static_cast<double>(n));
    parallel_for(0, T, threads, [&](long long w) {
      std::vector<double> u;
      auto& mine = acc[static_cast<size_t>(w)];
      for (long long r = R * w / T; r < R * (w + 1) / T; ++r) {
        RngStream rr = base.substream(static_cast<std::uint64_t>(r));
        sample_uniform_order_stats(n, rr, u);
        for (int k = 1; k <= n; ++k) {
          const double t = u[static_cast<size_t>(k - 1)];
          double stat = std::max(static_cast<double>(k) / n - t,
                                 t - static_cast<double>(k - 1) / n);
          if (weighted) stat /= std::sqrt(t * (1.0 - t));
          if (scale * stat > c) ++mine[static_cast<size_t>(k - 1)];
        }
      }
    });
    for (const auto& a : acc) {
      for (int k = 0; k < n; ++k) hits[static_cast<size_t>(k)] += a[static_cast<size_t>(k)];
    }
  } else {
    throw std::invalid_argument("run_pointwise_rp: unknown method " + method);
  }
  curve.rp.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    curve.rp[static_cast<size_t>(k)] =
        static_cast<double>(hits[static_cast<size_t>(k)]) / static_cast<double>(R);
  }
  return curve;
}

SimReport run_power_table(long long R, RngStream rng, int threads) {
  SimReport rep;
  rep.scenario = "table7";
  rep.replications = R;
  const double alpha = 0.1;
  const int n = 100;
  const double tail = 0.5 * tilde_alpha_formula(alpha, n);
  const QuantileGrid grid = build_grid_tail(n, tail);
  RngStream crit_rng = rng.substream(0xc0);
  const long long crit_reps = 1000000;
  const double c_exact =
      ks_exact_critical_1s(n, alpha, Sides::two_sided, crit_reps, crit_rng, threads);
  const double c_w =
      weighted_ks_critical_1s(n, alpha, crit_reps, crit_rng.substream(3), threads);

  const double rows[3][2] = {{0.3, 1.0}, {0.0, 1.2}, {0.0, 1.0}};
  for (const auto& rw : rows) {
    const double mu = rw[0], sigma = rw[1];
    struct Hits {
      long long dir = 0, ks = 0, wks = 0;
    };
    const int T = effective_threads(threads);
    std::vector<Hits> acc(static_cast<size_t>(T));
    RngStream base = rng.substream(0x700 + static_cast<int>(mu * 100 + sigma * 10));
    parallel_for(0, T, threads, [&](long long w) {
      std::vector<double> f0x(static_cast<size_t>(n));
      Hits h;
      for (long long r = R * w / T; r < R * (w + 1) / T; ++r) {
        RngStream rr = base.substream(static_cast<std::uint64_t>(r));
        for (int i = 0; i < n; ++i) {
          f0x[static_cast<size_t>(i)] = normal_cdf(mu + sigma * rr.normal());
        }
        std::sort(f0x.begin(), f0x.end());
        bool dir = false;
        for (int k = 0; k < n; ++k) {
          if (f0x[static_cast<size_t>(k)] < grid.ell[static_cast<size_t>(k)] ||
              f0x[static_cast<size_t>(k)] > grid.u[static_cast<size_t>(k)]) {
            dir = true;
            break;
          }
        }
        h.dir += dir;
        h.ks += ks_stat_1s(f0x, Sides::two_sided) > c_exact;
        h.wks += weighted_ks_stat_1s(f0x) > c_w;
      }
      acc[static_cast<size_t>(w)] = h;
    });
    Hits total;
    for (const auto& h : acc) {
      total.dir += h.dir;
      total.ks += h.ks;
      total.wks += h.wks;
    }
    char label[64];
    std::snprintf(label, sizeof label, "mu=%.1f sigma=%.1f", mu, sigma);
    rep.row_labels.push_back(label);
    auto pct = [&](const char* m, long long hits_count) {
      SimCell c = cell_of(m, hits_count, R);
      c.value *= 100.0;
      c.stderr_value *= 100.0;
      return c;
    };
    rep.rows.push_back({pct("dirichlet", total.dir), pct("ks", total.ks),
                        pct("weighted_ks", total.wks)});
  }
  return rep;
}

namespace {

Dgp load_quantile_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open quantile table " + path);
  std::vector<std::pair<double, double>> knots;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("tau", 0) == 0) continue;
    std::istringstream ss(line);
    double tau, q;
    char comma;
    if (ss >> tau >> comma >> q) knots.push_back({tau, q});
  }
  return Dgp::piecewise_quantile(std::move(knots), true);
}

}  // namespace

SimReport run_empirical_dgp(const std::string& task, const std::string& data_dir,
                            long long R, RngStream rng, int threads) {
  SimReport rep;
  rep.scenario = task;
  rep.replications = R;
  int n_treat, n_control, m_count;
  if (task == "library") {
    n_control = 10;
    n_treat = 9;
    m_count = 3;
  } else if (task == "fundraising") {
    n_control = 10;
    n_treat = 13;
    m_count = 4;
  } else {
    throw std::invalid_argument("run_empirical_dgp: unknown task " + task);
  }
  const Dgp treat = load_quantile_table(data_dir + "/dgp_" + task + "_treatment.csv");
  const Dgp control = load_quantile_table(data_dir + "/dgp_" + task + "_control.csv");
  const double alpha = 0.1;

  // truth of H0r: F_T(r) >= F_C(r) on the integer grid
  const double rmax = std::max(treat.quantile(1.0), control.quantile(1.0));
  std::vector<int> true_r;
  for (int r = 0; r <= static_cast<int>(rmax); ++r) {
    if (treat.cdf(r) >= control.cdf(r) - 1e-9) true_r.push_back(r);
  }
  // truth of the quantile hypotheses F_T^{-1}(tau_j) <= F_C^{-1}(tau_j)
  std::vector<bool> true_j(static_cast<size_t>(m_count + 1), false);
  for (int j = 1; j <= m_count; ++j) {
    const double tj = static_cast<double>(j) / (m_count + 1);
    true_j[static_cast<size_t>(j)] = treat.quantile(tj) <= control.quantile(tj) + 1e-9;
  }

  RngStream calib_rng = rng.substream(0xe3);
  const Calibration calib =
      tilde_alpha_mc_2s(alpha, n_treat, n_control, Sides::upper,
                        TwoSampleScheme::permutation, 200000, calib_rng, threads);
  const double tail = calib.tail();
  const SegmentThresholds st =
      SegmentThresholds::build(n_treat, n_control, Sides::upper);
  const double c_ks = ks_exact_critical_2s(n_treat, n_control, alpha, Sides::upper, 200000,
                                           calib_rng.substream(5), threads);

  QuantileTaskOptions qopt;
  qopt.m_count = m_count;
  qopt.calib_draws = 20000;
  QuantileCalibCache cache, pre_cache;

  struct Hits {
    long long any = 0, fwe = 0;
  };
  Hits basic, ks, joint, step, prestep;
  auto tally = [&](Hits& h, bool any, bool fwe) {
    h.any += any;
    h.fwe += fwe;
  };

  RngStream base = rng.substream(0x3a7a);
  std::vector<double> ts(static_cast<size_t>(n_treat)), cs(static_cast<size_t>(n_control));
  for (long long r = 0; r < R; ++r) {
    RngStream rr = base.substream(static_cast<std::uint64_t>(r));
    for (auto& v : ts) v = treat.draw(rr);
    for (auto& v : cs) v = control.draw(rr);
    const Sample sx(ts), sy(cs);

    // basic two-sample procedure on the pooled segments
    const auto res = run_mtp_2s(sx, sy, calib);
    bool any = !res.rejections.empty();
    bool fwe = false;
    for (int rv : true_r) {
      if (res.rejections.any_r_in(rv, rv)) {
        fwe = true;
        break;
      }
    }
    tally(basic, any, fwe);

    // KS on the same pooled scan, with the precomputed critical value
    {
      const auto& xs = sx.sorted();
      const auto& ysv = sy.sorted();
      const double scale = std::sqrt(static_cast<double>(n_treat) * n_control /
                                     (n_treat + n_control));
      const double band = c_ks / scale;
      bool kany = false, kfwe = false;
      size_t i = 0, j = 0;
      while (i < xs.size() || j < ysv.size()) {
        const double v =
            (j >= ysv.size() || (i < xs.size() && xs[i] <= ysv[j])) ? xs[i] : ysv[j];
        while (i < xs.size() && xs[i] == v) ++i;
        while (j < ysv.size() && ysv[j] == v) ++j;
        const double diff = static_cast<double>(j) / n_control -
                            static_cast<double>(i) / n_treat;
        if (diff > band) {
          kany = true;
          const double seg_lo = v;
          const double seg_hi = (i >= xs.size() && j >= ysv.size())
                                    ? std::numeric_limits<double>::infinity()
                                    : std::min(i < xs.size() ? xs[i] : ysv[j],
                                               j < ysv.size() ? ysv[j] : xs[i]);
          for (int rv : true_r) {
            if (rv >= seg_lo && rv < seg_hi) {
              kfwe = true;
              break;
            }
          }
        }
      }
      tally(ks, kany, kfwe);
    }

    auto qtally = [&](Hits& h, const QuantileTaskResult& qres) {
      bool qany = !qres.rejected_js.empty();
      bool qfwe = false;
      for (int j : qres.rejected_js) {
        if (true_j[static_cast<size_t>(j)]) {
          qfwe = true;
          break;
        }
      }
      tally(h, qany, qfwe);
    };
    qtally(joint, joint_quantile_ci_2s(sx, sy, alpha, Sides::upper, qopt, &cache));
    qtally(step, stepdown_2s(sx, sy, alpha, Sides::upper, qopt, &cache));
    qtally(prestep,
           pretest_then_stepdown_2s(sx, sy, alpha, Sides::upper, qopt, &cache, &pre_cache));
  }

  rep.row_labels = {"fwer", "global_power"};
  rep.rows.resize(2);
  auto push = [&](const char* m, const Hits& h) {
    rep.rows[0].push_back(cell_of(m, h.fwe, R));
    rep.rows[1].push_back(cell_of(m, h.any, R));
  };
  push("basic", basic);
  push("ks", ks);
  push("joint", joint);
  push("stepdown", step);
  push("pretest_stepdown", prestep);
  return rep;
}

}  // namespace qmt
