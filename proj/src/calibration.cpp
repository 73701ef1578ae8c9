#include "qmt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "qmt/parallel.hpp"
#include "qmt/sampling.hpp"
#include "qmt/special.hpp"
#include "qmt/twosample_core.hpp"

namespace qmt {

const char* to_string(Sides s) {
  switch (s) {
    case Sides::lower: return "lower";
    case Sides::upper: return "upper";
    default: return "two_sided";
  }
}

Sides sides_from_string(const std::string& s) {
  if (s == "lower") return Sides::lower;
  if (s == "upper") return Sides::upper;
  if (s == "two_sided" || s == "two" || s == "2") return Sides::two_sided;
  throw std::invalid_argument("unknown sides: " + s);
}

double tilde_alpha_formula(double alpha, long n) {
  if (n < 4) throw std::invalid_argument("tilde_alpha_formula: n must be at least 4");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("tilde_alpha_formula: alpha outside (0,1)");
  }
  const double c1 = -2.75 - 1.04 * std::log(alpha);
  const double c2 = 4.76 - 1.20 * alpha;
  const double c3 = 1.15 - 2.39 * alpha;
  const double c4 = -3.96 + 1.72 * std::pow(alpha, 0.171);
  const double ln = std::log(static_cast<double>(n));
  return std::exp(-c1 - c2 * std::sqrt(std::log(ln)) - c3 * std::pow(ln, c4));
}

double one_sided_adjust(double alpha1) {
  if (!(alpha1 >= 0.0 && alpha1 < 1.0)) {
    throw std::invalid_argument("one_sided_adjust: alpha outside [0,1)");
  }
  return 2.0 * alpha1 - alpha1 * alpha1;
}

Calibration calibrate_formula_1s(double alpha, int n, Sides sides) {
  Calibration c;
  c.alpha = alpha;
  c.sides = sides;
  c.n_x = n;
  c.source = Calibration::Source::formula;
  if (sides == Sides::two_sided) {
    c.tilde_alpha = tilde_alpha_formula(alpha, n);
  } else {
    c.tilde_alpha = 0.5 * tilde_alpha_formula(one_sided_adjust(alpha), n);
  }
  return c;
}

double CalibAccuracy::derived_tolerance(double alpha) const {
  const double a1 = alpha * (1.0 + c);
  const double t =
      c * alpha - normal_quantile(1.0 - p) * std::sqrt(a1 * (1.0 - a1)) /
                      std::sqrt(static_cast<double>(replications));
  if (!(t > 0.0)) {
    throw std::invalid_argument("CalibAccuracy: tolerance is not positive; raise c or M");
  }
  return t;
}

CalibAccuracy CalibAccuracy::for_alpha(double alpha) {
  CalibAccuracy acc;
  if (alpha < 0.03) {
    acc.c = 0.05;
    acc.replications = 1000000;
  } else {
    acc.c = 0.02;
    acc.replications = 200000;
  }
  acc.tolerance = acc.derived_tolerance(alpha);
  return acc;
}

namespace {

// ell/u grid at a given per-tail level; either vector may stay empty.
void tail_grid(double tail, int n, Sides sides, std::vector<double>& ell,
               std::vector<double>& u) {
  ell.clear();
  u.clear();
  for (int k = 1; k <= n; ++k) {
    const BetaParams p{static_cast<double>(k), static_cast<double>(n + 1 - k)};
    if (sides != Sides::upper) ell.push_back(beta_quantile(p, tail));
    if (sides != Sides::lower) u.push_back(beta_quantile(p, 1.0 - tail));
  }
}

bool order_stats_violate(const std::vector<double>& u_sorted, const std::vector<double>& ell,
                         const std::vector<double>& u) {
  const size_t n = u_sorted.size();
  if (!ell.empty()) {
    for (size_t k = 0; k < n; ++k) {
      if (u_sorted[k] < ell[k]) return true;
    }
  }
  if (!u.empty()) {
    for (size_t k = 0; k < n; ++k) {
      if (u_sorted[k] > u[k]) return true;
    }
  }
  return false;
}

}  // namespace

double simulate_fwer_1s(double tilde_alpha, int n, Sides sides, long long M, RngStream rng,
                        int threads) {
  if (n < 1 || M < 1) throw std::invalid_argument("simulate_fwer_1s: bad n or M");
  if (!(tilde_alpha > 0.0)) return 0.0;
  const double tail = sides == Sides::two_sided ? 0.5 * tilde_alpha : tilde_alpha;
  if (!(tail < 0.5)) throw std::invalid_argument("simulate_fwer_1s: pointwise level too large");
  std::vector<double> ell, u;
  tail_grid(tail, n, sides, ell, u);
  const int t = effective_threads(threads);
  std::vector<long long> partial(static_cast<size_t>(t), 0);
  // Each replication derives its own substream, so the count is invariant
  // to how replications are split across threads.
  auto worker = [&](int w) {
    const long long lo = M * w / t;
    const long long hi = M * (w + 1) / t;
    std::vector<double> buf;
    long long acc = 0;
    for (long long rep = lo; rep < hi; ++rep) {
      RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
      sample_uniform_order_stats(n, r, buf);
      acc += order_stats_violate(buf, ell, u) ? 1 : 0;
    }
    partial[static_cast<size_t>(w)] = acc;
  };
  if (t <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < t; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  long long hits = 0;
  for (long long v : partial) hits += v;
  return static_cast<double>(hits) / static_cast<double>(M);
}

Calibration tilde_alpha_mc_1s(double alpha, int n, Sides sides, const CalibAccuracy& acc,
                              RngStream rng, int threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("tilde_alpha_mc_1s: alpha outside (0,1)");
  }
  const double T = acc.tolerance > 0.0 ? acc.tolerance : acc.derived_tolerance(alpha);
  const long long M = acc.replications;

  auto fwer_at_tail = [&](double tail) {
    const double ta = sides == Sides::two_sided ? 2.0 * tail : tail;
    return simulate_fwer_1s(ta, n, sides, M, rng, threads);
  };

  double lo = 1e-12, hi = 0.49999;
  if (fwer_at_tail(hi) < alpha) {
    throw numeric_error("tilde_alpha_mc_1s: cannot bracket the target level");
  }
  double tail = 0.0, fhat = 0.0;
  bool done = false;
  for (int it = 0; it < 200 && !done; ++it) {
    tail = 0.5 * (lo + hi);
    fhat = fwer_at_tail(tail);
    if (std::fabs(fhat - alpha) < T) {
      done = true;
    } else if (fhat < alpha) {
      lo = tail;
    } else {
      hi = tail;
    }
    if (hi - lo < 1e-14) break;
  }
  if (!done) {
    throw numeric_error("tilde_alpha_mc_1s: search did not reach the tolerance band");
  }
  Calibration c;
  c.alpha = alpha;
  c.sides = sides;
  c.n_x = n;
  c.source = Calibration::Source::monte_carlo;
  c.tilde_alpha = sides == Sides::two_sided ? 2.0 * tail : tail;
  c.mc_meta = McMeta{M, T, 0, 0.0};
  c.alpha_low = fhat;
  c.alpha_high = fhat;
  return c;
}

Calibration tilde_alpha_mc_2s(double alpha, int n_x, int n_y, Sides sides,
                              TwoSampleScheme scheme, long long M, RngStream rng,
                              int threads) {
  if (n_x < 1 || n_y < 1) throw std::invalid_argument("tilde_alpha_mc_2s: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("tilde_alpha_mc_2s: alpha outside (0,1)");
  }
  const SegmentThresholds st = SegmentThresholds::build(n_x, n_y, sides);

  std::vector<double> crits;
  bool exhaustive = false;
  if (scheme == TwoSampleScheme::permutation) {
    const unsigned long long count = count_orderings(n_x, n_y, 200000ULL);
    if (count <= 200000ULL) {
      exhaustive = true;
      crits.reserve(count);
      enumerate_patterns(n_x, n_y, [&](const std::vector<std::uint8_t>& pat) {
        crits.push_back(st.pattern_critical(pat));
      });
    }
  }
  if (!exhaustive) {
    crits.resize(static_cast<size_t>(M));
    const int total = n_x + n_y;
    parallel_for(0, M, threads, [&](long long rep) {
      thread_local std::vector<std::uint8_t> pattern;
      thread_local std::vector<std::pair<double, std::uint8_t>> pooled;
      RngStream r = rng.substream(static_cast<std::uint64_t>(rep));
      if (scheme == TwoSampleScheme::permutation) {
        sample_pattern(n_x, n_y, r, pattern);
      } else {
        pooled.resize(static_cast<size_t>(total));
        for (int i = 0; i < total; ++i) {
          pooled[static_cast<size_t>(i)] = {r.uniform(), i < n_x ? std::uint8_t{1} : std::uint8_t{0}};
        }
        std::sort(pooled.begin(), pooled.end());
        pattern.resize(static_cast<size_t>(total));
        for (int i = 0; i < total; ++i) pattern[static_cast<size_t>(i)] = pooled[static_cast<size_t>(i)].second;
      }
      crits[static_cast<size_t>(rep)] = st.pattern_critical(pattern);
    });
  }
  std::sort(crits.begin(), crits.end());
  const auto N = static_cast<long long>(crits.size());
  const auto allowed = static_cast<long long>(std::floor(alpha * static_cast<double>(N)));

  // Largest per-tail level whose FWER stays <= alpha. Rejection is strict
  // above a pattern's critical level, so the edge itself still satisfies
  // the constraint.
  double edge_tail;
  if (allowed >= N) {
    edge_tail = std::numeric_limits<double>::infinity();
  } else {
    edge_tail = crits[static_cast<size_t>(allowed)];
  }

  const double scale = sides == Sides::two_sided ? 2.0 : 1.0;
  Calibration c;
  c.alpha = alpha;
  c.sides = sides;
  c.n_x = n_x;
  c.n_y = n_y;
  c.source = Calibration::Source::monte_carlo;
  const double edge_reported = std::min(scale * edge_tail, 0.49995);
  c.tilde_alpha = edge_reported - 0.0001;
  c.mc_meta = McMeta{N, 0.0, 0, edge_reported};

  const double final_tail = c.tail();
  const auto below = static_cast<long long>(
      std::lower_bound(crits.begin(), crits.end(), final_tail) - crits.begin());
  const auto at_edge = static_cast<long long>(
      std::upper_bound(crits.begin(), crits.end(), edge_tail) - crits.begin());
  c.alpha_low = static_cast<double>(below) / static_cast<double>(N);
  c.alpha_high = std::isinf(edge_tail)
                     ? c.alpha_low
                     : static_cast<double>(at_edge) / static_cast<double>(N);
  (void)exhaustive;
  return c;
}

// --- serialization -------------------------------------------------------

std::string Calibration::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["tilde_alpha"] = tilde_alpha;
  j["sides"] = qmt::to_string(sides);
  if (n_y > 0) {
    j["n"] = {n_x, n_y};
  } else {
    j["n"] = n_x;
  }
  switch (source) {
    case Source::formula: j["source"] = "formula"; break;
    case Source::monte_carlo: j["source"] = "monte_carlo"; break;
    case Source::table: j["source"] = "table"; break;
  }
  if (mc_meta) {
    j["mc_meta"] = {{"replications", mc_meta->replications},
                    {"tolerance", mc_meta->tolerance},
                    {"seed", mc_meta->seed},
                    {"step_edge", mc_meta->step_edge}};
  }
  if (n_y > 0) {
    j["alpha_low"] = alpha_low;
    j["alpha_high"] = alpha_high;
  }
  if (interpolated) j["interpolated"] = true;
  return j.dump();
}

Calibration Calibration::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Calibration c;
  c.alpha = j.at("alpha").get<double>();
  c.tilde_alpha = j.at("tilde_alpha").get<double>();
  c.sides = sides_from_string(j.at("sides").get<std::string>());
  if (j.at("n").is_array()) {
    c.n_x = j.at("n")[0].get<int>();
    c.n_y = j.at("n")[1].get<int>();
  } else {
    c.n_x = j.at("n").get<int>();
  }
  const std::string src = j.at("source").get<std::string>();
  c.source = src == "formula" ? Source::formula
             : src == "table" ? Source::table
                              : Source::monte_carlo;
  if (j.contains("mc_meta")) {
    McMeta m;
    m.replications = j["mc_meta"].value("replications", 0LL);
    m.tolerance = j["mc_meta"].value("tolerance", 0.0);
    m.seed = j["mc_meta"].value("seed", 0ULL);
    m.step_edge = j["mc_meta"].value("step_edge", 0.0);
    c.mc_meta = m;
  }
  c.alpha_low = j.value("alpha_low", 0.0);
  c.alpha_high = j.value("alpha_high", 0.0);
  c.interpolated = j.value("interpolated", false);
  return c;
}

// --- reference table -----------------------------------------------------

ReferenceTable ReferenceTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("reference table: cannot open " + path);
  ReferenceTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("alpha", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    ReferenceTableRow r;
    char comma;
    std::istringstream ss(line);
    if (!(ss >> r.alpha >> comma >> r.n_x >> comma >> r.n_y >> comma >> r.tilde_alpha >>
          comma >> r.alpha_low >> comma >> r.alpha_high)) {
      throw std::runtime_error("reference table: malformed row: " + line);
    }
    t.rows_.push_back(r);
  }
  return t;
}

void ReferenceTable::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("reference table: cannot write " + tmp);
    out << "alpha,nx,ny,tilde_alpha,alpha_low,alpha_high\n";
    char buf[160];
    for (const auto& r : rows_) {
      std::snprintf(buf, sizeof buf, "%.8g,%d,%d,%.8g,%.8g,%.8g\n", r.alpha, r.n_x, r.n_y,
                    r.tilde_alpha, r.alpha_low, r.alpha_high);
      out << buf;
    }
  }
  std::filesystem::rename(tmp, path);
}

void ReferenceTable::upsert(const ReferenceTableRow& row) {
  for (auto& r : rows_) {
    if (r.alpha == row.alpha && r.n_x == row.n_x && r.n_y == row.n_y) {
      r = row;
      return;
    }
  }
  rows_.push_back(row);
}

Calibration ReferenceTable::lookup(double alpha, int n_x, int n_y, bool interpolate_n) const {
  auto as_calibration = [&](double tilde, double lo, double hi, bool interp) {
    Calibration c;
    c.alpha = alpha;
    c.tilde_alpha = tilde;
    c.sides = Sides::two_sided;
    c.n_x = n_x;
    c.n_y = n_y;
    c.source = Calibration::Source::table;
    c.alpha_low = lo;
    c.alpha_high = hi;
    c.interpolated = interp;
    return c;
  };
  for (const auto& r : rows_) {
    if (r.alpha == alpha && r.n_x == n_x && r.n_y == n_y) {
      return as_calibration(r.tilde_alpha, r.alpha_low, r.alpha_high, false);
    }
  }
  if (interpolate_n) {
    // bracket in n_x at fixed n_y, or in n_y at fixed n_x
    for (int axis = 0; axis < 2; ++axis) {
      const ReferenceTableRow* lo = nullptr;
      const ReferenceTableRow* hi = nullptr;
      for (const auto& r : rows_) {
        if (r.alpha != alpha) continue;
        const int fixed = axis == 0 ? r.n_y : r.n_x;
        const int fixed_want = axis == 0 ? n_y : n_x;
        if (fixed != fixed_want) continue;
        const int v = axis == 0 ? r.n_x : r.n_y;
        const int want = axis == 0 ? n_x : n_y;
        if (v <= want && (!lo || v > (axis == 0 ? lo->n_x : lo->n_y))) lo = &r;
        if (v >= want && (!hi || v < (axis == 0 ? hi->n_x : hi->n_y))) hi = &r;
      }
      if (lo && hi) {
        const int vlo = axis == 0 ? lo->n_x : lo->n_y;
        const int vhi = axis == 0 ? hi->n_x : hi->n_y;
        const int want = axis == 0 ? n_x : n_y;
        if (vlo == vhi) return as_calibration(lo->tilde_alpha, lo->alpha_low, lo->alpha_high, true);
        const double w = static_cast<double>(want - vlo) / static_cast<double>(vhi - vlo);
        return as_calibration(lo->tilde_alpha + w * (hi->tilde_alpha - lo->tilde_alpha),
                              std::min(lo->alpha_low, hi->alpha_low),
                              std::max(lo->alpha_high, hi->alpha_high), true);
      }
    }
  }
  throw std::out_of_range("reference table: no entry for the requested (alpha, n_x, n_y)");
}

}  // namespace qmt
