#include <doctest.h>

#include <cmath>

#include "qmt/special.hpp"

using namespace qmt;

namespace {

// independent root-finder used as the oracle for the quantile routine
double bisect_beta_quantile(double k, double m, double q) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_cdf(k, m, mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double kolmogorov_series(double x) {
  double s = 0.0, sign = 1.0;
  for (int j = 1; j <= 300; ++j) {
    s += sign * std::exp(-2.0 * j * j * x * x);
    sign = -sign;
  }
  return 2.0 * s;
}

}  // namespace

TEST_CASE("beta cdf closed forms") {
  CHECK(beta_cdf(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(beta_cdf(2, 1, 0.5) == doctest::Approx(0.25).epsilon(1e-12));
  // Beta(9,4) at 1/2 equals the Binomial(12, 1/2) CDF at 3
  CHECK(beta_cdf(9, 4, 0.5) == doctest::Approx(299.0 / 4096.0).epsilon(1e-11));
  CHECK(binomial_cdf(3, 12, 0.5) == doctest::Approx(299.0 / 4096.0).epsilon(1e-11));
  CHECK(beta_cdf(9, 4, 0.0) == 0.0);
  CHECK(beta_cdf(9, 4, 1.0) == 1.0);
  CHECK_THROWS_AS(beta_cdf(9, 4, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(beta_cdf(-1, 4, 0.5), std::invalid_argument);
}

TEST_CASE("beta cdf monotone in x") {
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = beta_cdf(3.7, 8.2, i / 100.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("beta quantile matches bisection oracle") {
  CHECK(beta_quantile(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(beta_quantile(10, 10, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
  const double oracle = bisect_beta_quantile(3, 8, 0.05);
  CHECK(std::fabs(beta_quantile(3, 8, 0.05) - oracle) < 1e-10);
  CHECK_THROWS_AS(beta_quantile(3, 8, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_quantile(3, 8, 1.0), std::invalid_argument);
}

TEST_CASE("beta quantile round trip on a grid") {
  for (int k = 1; k <= 20; k += 3) {
    for (int i = 1; i <= 19; ++i) {
      const double q = i / 20.0;
      const double x = beta_quantile(k, 21 - k, q);
      CHECK(std::fabs(beta_cdf(k, 21 - k, x) - q) < 1e-9);
    }
  }
  // fractional shapes too
  const double x = beta_quantile(2.5, 7.25, 0.123);
  CHECK(std::fabs(beta_cdf(2.5, 7.25, x) - 0.123) < 1e-9);
}

TEST_CASE("beta quantile strictly increasing in q and k") {
  const int n = 30;
  double prev = 0.0;
  for (int i = 1; i < 40; ++i) {
    const double v = beta_quantile(7, n + 1 - 7, i / 40.0);
    CHECK(v > prev);
    prev = v;
  }
  prev = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double v = beta_quantile(k, n + 1 - k, 0.2);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("normal quantile and cdf agree") {
  for (double q : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
    CHECK(normal_cdf(normal_quantile(q)) == doctest::Approx(q).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
}

TEST_CASE("kolmogorov critical values") {
  CHECK(kolmogorov_critical(0.1) == doctest::Approx(1.2238).epsilon(1e-4));
  // critical value decreases toward zero as alpha -> 1
  CHECK(kolmogorov_critical(0.99) < kolmogorov_critical(0.9));
  CHECK(kolmogorov_critical(0.99999) < kolmogorov_critical(0.99));
  CHECK(kolmogorov_survival(kolmogorov_critical(0.999)) ==
        doctest::Approx(0.999).epsilon(1e-6));
  // oracle: invert the raw series by bisection
  double lo = 0.1, hi = 3.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_series(mid) > 0.05 ? lo : hi) = mid;
  }
  CHECK(kolmogorov_critical(0.05) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));
  CHECK(kolmogorov_survival(kolmogorov_critical(0.42)) == doctest::Approx(0.42).epsilon(1e-6));
}
