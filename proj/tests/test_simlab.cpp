#include <doctest.h>

#include <cmath>

#include "qmt/simlab.hpp"

using namespace qmt;

TEST_CASE("piecewise quantile generators") {
  const Dgp d = Dgp::piecewise_quantile({{0.0, -1.0}, {0.5, 0.0}, {1.0, 2.0}}, false);
  CHECK(d.quantile(0.25) == doctest::Approx(-0.5));
  CHECK(d.quantile(0.75) == doctest::Approx(1.0));
  CHECK(d.cdf(d.quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-6));

  const Dgp f = Dgp::piecewise_quantile({{0.0, 0.0}, {1.0, 10.0}}, true);
  RngStream rng(193);
  for (int i = 0; i < 50; ++i) {
    const double v = f.draw(rng);
    CHECK(v == std::floor(v));
  }
  // step-function cdf is right-continuous: cdf(3) covers all u with
  // floor(10 u) <= 3, so it equals 0.4
  CHECK(f.cdf(3.0) == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("reports are deterministic in (scenario, R, seed)") {
  const SimReport a = run_fwer_table("table1", 2000, RngStream(7), 1);
  const SimReport b = run_fwer_table("table1", 2000, RngStream(7), 1);
  CHECK(a.to_csv() == b.to_csv());
  CHECK_THROWS_AS(run_fwer_table("nope", 10, RngStream(1)), std::invalid_argument);
}

TEST_CASE("table1 smoke run is in the right neighborhood") {
  const SimReport rep = run_fwer_table("table1", 20000, RngStream(11), 0);
  const auto& c = rep.cell("alpha=0.10 n=20", "dirichlet");
  CHECK(c.value == doctest::Approx(0.101).epsilon(0.15));
  const auto& k = rep.cell("alpha=0.10 n=20", "ks_exact");
  CHECK(k.value == doctest::Approx(0.100).epsilon(0.15));
}

TEST_CASE("pointwise curves: flat for the calibrated grid, humped for ks") {
  const RpCurve dir = run_pointwise_rp("dirichlet", 20, 0.1, 50000, RngStream(13));
  const Calibration calib = calibrate_formula_1s(0.1, 20, Sides::lower);
  for (int k = 0; k < 20; ++k) {
    CHECK(dir.rp[static_cast<size_t>(k)] ==
          doctest::Approx(calib.tilde_alpha).epsilon(0.25));
  }
  const RpCurve ks = run_pointwise_rp("ks", 20, 0.1, 50000, RngStream(13));
  double mx = 0.0, mn = 1.0;
  for (double v : ks.rp) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  CHECK(mx > 3.0 * std::max(mn, 1e-12));
  CHECK(ks.to_csv().rfind("k,rp,stderr", 0) == 0);
  CHECK_THROWS_AS(run_pointwise_rp("nope", 20, 0.1, 10, RngStream(1)), std::invalid_argument);
}

TEST_CASE("empirical scenario smoke run emits valid probabilities") {
  const SimReport rep = run_empirical_dgp("library", QMT_DATA_DIR, 1, RngStream(17), 1);
  for (const auto& row : rep.rows) {
    for (const auto& c : row) {
      CHECK(c.value >= 0.0);
      CHECK(c.value <= 1.0);
    }
  }
  CHECK(rep.row_labels.size() == 2);
}

TEST_CASE("report serialization") {
  const SimReport rep = run_fwer_table("table1", 500, RngStream(19), 1);
  const std::string j = rep.to_json();
  CHECK(j.find("\"scenario\": \"table1\"") != std::string::npos);
  const std::string c = rep.to_csv();
  CHECK(c.rfind("scenario,row,method,value,stderr", 0) == 0);
  CHECK_THROWS_AS(rep.cell("alpha=0.10 n=20", "nope"), std::out_of_range);
}
