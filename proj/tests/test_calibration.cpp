#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "qmt/calibration.hpp"
#include "qmt/special.hpp"

using namespace qmt;

TEST_CASE("pointwise level formula hits the documented magnitudes") {
  CHECK(tilde_alpha_formula(0.1, 20) == doctest::Approx(0.0106).epsilon(0.01));
  CHECK(tilde_alpha_formula(0.1, 100) == doctest::Approx(0.00456).epsilon(0.01));
  CHECK_THROWS_AS(tilde_alpha_formula(0.1, 3), std::invalid_argument);
  // monotone in alpha at fixed n
  double prev = 0.0;
  for (double a : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}) {
    const double v = tilde_alpha_formula(a, 50);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("one sided adjustment") {
  CHECK(one_sided_adjust(0.05) == doctest::Approx(0.0975).epsilon(1e-12));
  CHECK(one_sided_adjust(0.0) == 0.0);
  CHECK(one_sided_adjust(0.1) == doctest::Approx(0.19).epsilon(1e-12));
}

TEST_CASE("search tolerances reproduce the documented values") {
  CalibAccuracy a05 = CalibAccuracy::for_alpha(0.05);
  CHECK(a05.tolerance == doctest::Approx(0.00019).epsilon(0.03));
  CalibAccuracy a10 = CalibAccuracy::for_alpha(0.10);
  CHECK(a10.tolerance == doctest::Approx(0.00089).epsilon(0.02));
  CalibAccuracy a01 = CalibAccuracy::for_alpha(0.01);
  CHECK(a01.tolerance == doctest::Approx(0.00033).epsilon(0.02));
}

TEST_CASE("simulated familywise rate: small-sample exact oracle") {
  // n = 2, both tails at level 1/8 (pointwise two-sided size 1/4).
  // Exact non-coverage by 2-D quadrature over the ordered-uniform
  // density f(u1,u2) = 2 on {u1 < u2}.
  const double tail = 0.125;
  const double l1 = beta_quantile(1, 2, tail), u1 = beta_quantile(1, 2, 1 - tail);
  const double l2 = beta_quantile(2, 1, tail), u2 = beta_quantile(2, 1, 1 - tail);
  const int G = 2000;
  double inside = 0.0;
  for (int i = 0; i < G; ++i) {
    const double x = (i + 0.5) / G;
    if (x < l1 || x > u1) continue;
    for (int j = 0; j < G; ++j) {
      const double y = (j + 0.5) / G;
      if (y <= x) continue;
      if (y < l2 || y > u2) continue;
      inside += 2.0;
    }
  }
  const double exact = 1.0 - inside / (static_cast<double>(G) * G);
  const double sim = simulate_fwer_1s(0.25, 2, Sides::two_sided, 400000, RngStream(5), 1);
  CHECK(sim == doctest::Approx(exact).epsilon(0.02));
}

TEST_CASE("simulated familywise rate: degenerate levels") {
  CHECK(simulate_fwer_1s(0.0, 10, Sides::two_sided, 1000, RngStream(1)) == 0.0);
  CHECK(simulate_fwer_1s(1e-9, 10, Sides::lower, 20000, RngStream(1)) ==
        doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("one- and two-sided rates are linked") {
  // two-sided familywise rate at per-tail level lambda sits between
  // 2 a1 - a1^2 and 2 a1, where a1 is the one-sided rate at lambda
  const int n = 40;
  const double lambda = 0.004;
  const long long M = 200000;
  const double a1 = simulate_fwer_1s(lambda, n, Sides::lower, M, RngStream(2));
  const double a1u = simulate_fwer_1s(lambda, n, Sides::upper, M, RngStream(2));
  const double a2 = simulate_fwer_1s(2 * lambda, n, Sides::two_sided, M, RngStream(2));
  CHECK(a1 == doctest::Approx(a1u).epsilon(0.05));
  CHECK(a2 <= 2 * a1 + 0.003);
  CHECK(a2 >= 2 * a1 - a1 * a1 - 0.003);
}

TEST_CASE("monte carlo one-sample calibration") {
  CalibAccuracy acc;
  acc.replications = 100000;
  acc.tolerance = acc.derived_tolerance(0.1) * std::sqrt(2.0);
  const Calibration c = tilde_alpha_mc_1s(0.1, 20, Sides::two_sided, acc, RngStream(3));
  CHECK(c.source == Calibration::Source::monte_carlo);
  // agrees with the closed form within its documented accuracy budget
  const double formula = tilde_alpha_formula(0.1, 20);
  const double fwer_at_formula =
      simulate_fwer_1s(formula, 20, Sides::two_sided, 200000, RngStream(4));
  CHECK(fwer_at_formula > 0.089);
  CHECK(fwer_at_formula < 0.111);
  CHECK(c.tilde_alpha == doctest::Approx(formula).epsilon(0.25));
}

TEST_CASE("two-sample calibration by full enumeration") {
  RngStream rng(7);
  const Calibration c = tilde_alpha_mc_2s(0.05, 6, 12, Sides::two_sided,
                                          TwoSampleScheme::permutation, 0, rng);
  REQUIRE(c.mc_meta.has_value());
  CHECK(c.mc_meta->replications == 18564);
  CHECK(c.mc_meta->step_edge == doctest::Approx(0.15351700).epsilon(5e-6));
  CHECK(c.tilde_alpha == doctest::Approx(0.15351700 - 0.0001).epsilon(5e-5));
  CHECK(c.alpha_low <= 0.05);
  CHECK(c.alpha_high >= 0.05);

  const Calibration c2 = tilde_alpha_mc_2s(0.01, 6, 11, Sides::two_sided,
                                           TwoSampleScheme::permutation, 0, rng);
  CHECK(c2.mc_meta->step_edge == doctest::Approx(0.07164299).epsilon(5e-5));
}

TEST_CASE("two-sample schemes agree") {
  RngStream rng(9);
  const Calibration exact = tilde_alpha_mc_2s(0.05, 6, 12, Sides::two_sided,
                                              TwoSampleScheme::permutation, 0, rng);
  const Calibration sim = tilde_alpha_mc_2s(0.05, 6, 12, Sides::two_sided,
                                            TwoSampleScheme::uniform_sim, 200000, rng);
  // same step of the exact familywise rate function
  CHECK(sim.tilde_alpha == doctest::Approx(exact.tilde_alpha).epsilon(0.02));
}

TEST_CASE("two-sample calibration, degenerate sizes") {
  RngStream rng(11);
  const Calibration c = tilde_alpha_mc_2s(0.05, 1, 1, Sides::two_sided,
                                          TwoSampleScheme::permutation, 0, rng);
  CHECK(c.tilde_alpha < 0.5);
  CHECK(c.alpha_low == 0.0);  // nothing can reject
}

TEST_CASE("calibration levels are monotone in alpha") {
  RngStream rng(13);
  double prev = 0.0;
  for (double a : {0.01, 0.05, 0.1, 0.2}) {
    const Calibration c = tilde_alpha_mc_2s(a, 6, 12, Sides::two_sided,
                                            TwoSampleScheme::permutation, 0, rng);
    CHECK(c.tilde_alpha >= prev);
    prev = c.tilde_alpha;
  }
}

TEST_CASE("reference table round trip and lookup") {
  ReferenceTable t;
  t.upsert({0.05, 6, 12, 0.153417, 0.049989, 0.050043});
  t.upsert({0.05, 10, 12, 0.13, 0.0499, 0.0502});
  const std::string path =
      (std::filesystem::temp_directory_path() / "qmt_table_test.csv").string();
  t.save(path);
  const ReferenceTable u = ReferenceTable::load(path);
  REQUIRE(u.rows().size() == 2);
  const Calibration hit = u.lookup(0.05, 6, 12);
  CHECK(hit.tilde_alpha == doctest::Approx(0.153417).epsilon(1e-9));
  CHECK(hit.source == Calibration::Source::table);
  CHECK_FALSE(hit.interpolated);
  CHECK_THROWS_AS(u.lookup(0.05, 8, 12, false), std::out_of_range);
  const Calibration interp = u.lookup(0.05, 8, 12, true);
  CHECK(interp.interpolated);
  CHECK(interp.tilde_alpha == doctest::Approx(0.5 * (0.153417 + 0.13)).epsilon(1e-9));
  std::filesystem::remove(path);
}

TEST_CASE("calibration json round trip") {
  RngStream rng(15);
  const Calibration c = tilde_alpha_mc_2s(0.05, 6, 12, Sides::two_sided,
                                          TwoSampleScheme::permutation, 0, rng);
  const Calibration back = Calibration::from_json(c.to_json());
  CHECK(back.alpha == c.alpha);
  CHECK(back.tilde_alpha == c.tilde_alpha);
  CHECK(back.n_x == 6);
  CHECK(back.n_y == 12);
  CHECK(back.sides == Sides::two_sided);
  CHECK(back.mc_meta->step_edge == doctest::Approx(c.mc_meta->step_edge));
}
