#include <doctest.h>

#include <cmath>
#include <vector>

#include "qmt/mtp1.hpp"
#include "qmt/sampling.hpp"
#include "qmt/special.hpp"

using namespace qmt;

namespace {

std::vector<double> intro_dataset() {
  std::vector<double> xs;
  for (int i = 1; i <= 15; ++i) xs.push_back(i / 21.0);
  for (int i = 1; i <= 5; ++i) xs.push_back(1e6 + i);
  return xs;
}

Calibration tail_calibration(double tail, int n, Sides sides) {
  Calibration c;
  c.alpha = 0.0;
  c.sides = sides;
  c.n_x = n;
  c.tilde_alpha = sides == Sides::two_sided ? 2.0 * tail : tail;
  return c;
}

}  // namespace

TEST_CASE("grid closed forms") {
  const QuantileGrid g1 = build_grid_tail(1, 0.1);
  CHECK(g1.ell[0] == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(g1.u[0] == doctest::Approx(0.9).epsilon(1e-10));
  const QuantileGrid g2 = build_grid_tail(2, 0.25);
  CHECK(g2.ell[0] == doctest::Approx(1.0 - std::sqrt(0.75)).epsilon(1e-10));
  CHECK(g2.u[1] == doctest::Approx(std::sqrt(0.75)).epsilon(1e-10));
  // round trip against the cdf
  const QuantileGrid g = build_grid_tail(20, 0.5 * tilde_alpha_formula(0.1, 20));
  for (int k = 1; k <= 20; ++k) {
    CHECK(beta_cdf(k, 21 - k, g.ell[static_cast<size_t>(k - 1)]) ==
          doctest::Approx(g.tail).epsilon(1e-9));
  }
}

TEST_CASE("data at the null quantiles is never rejected") {
  const int n = 20;
  std::vector<double> xs;
  for (int k = 1; k <= n; ++k) xs.push_back(k / 21.0);
  const Sample s(xs);
  const NullModel null = NullModel::uniform(0, 1);
  const auto res = run_mtp_1s(s, null, calibrate_formula_1s(0.1, n, Sides::two_sided));
  CHECK(res.rejections.empty());
}

TEST_CASE("outliers above the support are rejected where KS is silent") {
  const Sample s(intro_dataset());
  const NullModel null = NullModel::uniform(0, 1);
  const auto res = run_mtp_1s(s, null, calibrate_formula_1s(0.1, 20, Sides::two_sided));
  REQUIRE_FALSE(res.rejections.empty());
  for (const auto& iv : res.rejections.intervals) {
    CHECK(iv.side == Side::above);
  }
  // the five outliers sit at null CDF value 1, above every upper bound
  CHECK(res.rejections.any_tau_in(0.99, 1.0));
}

TEST_CASE("rejection intervals and monotone implication") {
  // small handmade case: n = 3, push the smallest observation way down
  const Sample s({-0.5, 0.4, 0.6});
  const NullModel null = NullModel::uniform(0, 1);
  const auto res = run_mtp_1s(s, null, tail_calibration(0.05, 3, Sides::two_sided));
  REQUIRE_FALSE(res.rejections.empty());
  const auto& iv = res.rejections.intervals.front();
  CHECK(iv.side == Side::below);
  // interval is (F0(x_(1)), ell_1] = (0, ell_1]
  CHECK(iv.tau_lo == doctest::Approx(0.0));
  CHECK(iv.tau_hi == doctest::Approx(beta_quantile(1, 3, 0.05)).epsilon(1e-9));
  CHECK(iv.witness == 1);
  // r image maps through the null quantile function
  CHECK(iv.r_lo == doctest::Approx(-0.5));
  CHECK(iv.r_hi == doctest::Approx(null.quantile(iv.tau_hi)).epsilon(1e-12));
}

TEST_CASE("equivariant under strictly increasing transforms") {
  RngStream rng(29);
  std::vector<double> xs(15);
  for (auto& v : xs) v = rng.normal();
  const Sample s(xs);
  const NullModel null = NullModel::normal(0, 1);
  const Calibration calib = calibrate_formula_1s(0.2, 15, Sides::two_sided);
  const auto base = run_mtp_1s(s, null, calib);

  auto g = [](double v) { return std::exp(v); };
  std::vector<double> gx(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) gx[i] = g(xs[i]);
  const NullModel gnull = NullModel::custom(
      [&](double tau) { return g(normal_quantile(tau)); },
      [&](double x) { return normal_cdf(std::log(x)); }, "lognormal");
  const auto mapped = run_mtp_1s(Sample(gx), gnull, calib);

  REQUIRE(base.rejections.intervals.size() == mapped.rejections.intervals.size());
  for (size_t i = 0; i < base.rejections.intervals.size(); ++i) {
    CHECK(base.rejections.intervals[i].tau_lo ==
          doctest::Approx(mapped.rejections.intervals[i].tau_lo).epsilon(1e-9));
    CHECK(base.rejections.intervals[i].tau_hi ==
          doctest::Approx(mapped.rejections.intervals[i].tau_hi).epsilon(1e-9));
  }
}

TEST_CASE("pointwise exactness of each order statistic's test") {
  // P(X_{n:k} < F^{-1}(ell_k)) = tail for every k, any continuous F
  const int n = 12, reps = 200000;
  const double tail = 0.02;
  const QuantileGrid g = build_grid_tail(n, tail);
  std::vector<long long> hits(static_cast<size_t>(n), 0);
  RngStream rng(31);
  std::vector<double> u;
  for (int r = 0; r < reps; ++r) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
    sample_uniform_order_stats(n, rr, u);
    for (int k = 0; k < n; ++k) {
      hits[static_cast<size_t>(k)] += u[static_cast<size_t>(k)] < g.ell[static_cast<size_t>(k)];
    }
  }
  const double se = std::sqrt(tail * (1 - tail) / reps);
  for (int k = 0; k < n; ++k) {
    CHECK(std::fabs(static_cast<double>(hits[static_cast<size_t>(k)]) / reps - tail) <
          4 * se);
  }
}

TEST_CASE("gof p-value behaves like a p-value") {
  const NullModel null = NullModel::uniform(0, 1);
  SUBCASE("well-behaved data gets a large p") {
    std::vector<double> xs;
    for (int k = 1; k <= 20; ++k) xs.push_back(k / 21.0);
    const PValue p = gof_pvalue_1s(Sample(xs), null, Sides::two_sided);
    CHECK((p.censored_high || p.value > 0.5));
  }
  SUBCASE("the outlier dataset is rejected far below the KS p of 0.1376") {
    const PValue p = gof_pvalue_1s(Sample(intro_dataset()), null, Sides::two_sided);
    CHECK(p.value < 0.1);
    CHECK(p.censored_low);
  }
  SUBCASE("roughly uniform under the null") {
    const int reps = 4000;
    RngStream rng(37);
    int below = 0;
    std::vector<double> u;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      sample_uniform_order_stats(50, rr, u);
      const PValue p = gof_pvalue_1s(Sample(u), null, Sides::two_sided);
      below += !p.censored_low && !p.censored_high && p.value <= 0.1;
    }
    CHECK(static_cast<double>(below) / reps == doctest::Approx(0.1).epsilon(0.25));
  }
}

TEST_CASE("confidence band duality") {
  const NullModel null = NullModel::uniform(0, 1);
  RngStream rng(41);
  int checked = 0;
  std::vector<double> u;
  for (int r = 0; r < 100; ++r) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
    sample_uniform_order_stats(25, rr, u);
    // jitter into a generic dataset
    const Sample s(u);
    const Band band = confidence_band_1s(s, 0.1);
    const auto res = run_mtp_1s(s, null, calibrate_formula_1s(0.1, 25, Sides::two_sided));
    CHECK(band.covers(null) == res.rejections.empty());
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("band envelope evaluation and csv") {
  const Sample s({0.2, 0.5, 0.7, 0.9});
  const Band b = confidence_band_1s(s, 0.2);
  CHECK(b.lower_at(0.1) == 0.0);
  CHECK(b.upper_at(100.0) == 1.0);
  CHECK(b.lower_at(0.55) == doctest::Approx(b.lower[1]));
  const std::string csv = b.to_csv();
  CHECK(csv.find("x,lower,upper") == 0);
  CHECK(csv.find("-inf") != std::string::npos);
}

TEST_CASE("ties are flagged but processed") {
  const Sample s({0.3, 0.3, 0.7, 0.8});
  CHECK(s.tie_count() == 1);
  const auto res =
      run_mtp_1s(s, NullModel::uniform(0, 1), calibrate_formula_1s(0.1, 4, Sides::two_sided));
  CHECK(res.had_ties);
}

TEST_CASE("NaN observations are rejected") {
  CHECK_THROWS_AS(Sample({0.1, std::nan("")}), std::invalid_argument);
}
