#include <doctest.h>

#include <cmath>
#include <vector>

#include "qmt/sampling.hpp"
#include "qmt/special.hpp"

using namespace qmt;

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  std::vector<std::uint64_t> seq_a, seq_b;
  for (int i = 0; i < 64; ++i) {
    seq_a.push_back(a.next_u64());
    seq_b.push_back(b.next_u64());
  }
  CHECK(seq_a == seq_b);
  bool differs = false;
  for (int i = 0; i < 64; ++i) {
    if (c.next_u64() != seq_a[static_cast<size_t>(i)]) differs = true;
  }
  CHECK(differs);
  // substreams reproduce as well
  RngStream s1 = RngStream(9).substream(123);
  RngStream s2 = RngStream(9).substream(123);
  CHECK(s1.next_u64() == s2.next_u64());
}

TEST_CASE("uniform order statistics have the right marginals") {
  const int reps = 100000;
  RngStream rng(11);

  SUBCASE("n=1 mean") {
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      sum += sample_uniform_order_stats(1, rr)[0];
    }
    CHECK(sum / reps == doctest::Approx(0.5).epsilon(0.01));
  }

  SUBCASE("n=20: mean of the 16th entry is 16/21") {
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      sum += sample_uniform_order_stats(20, rr)[15];
    }
    CHECK(sum / reps == doctest::Approx(16.0 / 21.0).epsilon(0.008));
  }

  SUBCASE("n=20: low quantile of the k-th entry matches the beta quantile") {
    const int k = 5;
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      vals[static_cast<size_t>(r)] = sample_uniform_order_stats(20, rr)[k - 1];
    }
    std::sort(vals.begin(), vals.end());
    const double emp = vals[static_cast<size_t>(reps / 100)];
    const double expect = beta_quantile(k, 21 - k, 0.01);
    CHECK(emp == doctest::Approx(expect).epsilon(0.08));
  }
}

TEST_CASE("joint law: P(all three order stats below 1/2) = 1/8") {
  const int reps = 1000000;
  RngStream rng(13);
  long long hits = 0;
  std::vector<double> u;
  for (int r = 0; r < reps; ++r) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
    sample_uniform_order_stats(3, rr, u);
    hits += u[2] <= 0.5;
  }
  CHECK(static_cast<double>(hits) / reps == doctest::Approx(0.125).epsilon(0.016));
}

TEST_CASE("dirichlet draws") {
  RngStream rng(17);
  SUBCASE("shapes (1,1) give a uniform split") {
    double sum = 0.0;
    const int reps = 50000;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      const auto v = sample_dirichlet({1.0, 1.0}, rr);
      CHECK(v[0] + v[1] == doctest::Approx(1.0).epsilon(1e-12));
      sum += v[0];
    }
    CHECK(sum / reps == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("fractional shapes match the mean formula") {
    // oracle: mean of component i is shape_i / sum(shapes)
    double sum = 0.0;
    const int reps = 100000;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      sum += sample_dirichlet({2.5, 3.5}, rr)[0];
    }
    CHECK(sum / reps == doctest::Approx(2.5 / 6.0).epsilon(0.012));
  }
  SUBCASE("all-ones shapes reproduce order-statistic increments") {
    // increments of sorted uniforms have the same law; check one margin
    const int reps = 100000;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
      const auto v = sample_dirichlet(std::vector<double>(6, 1.0), rr);
      sum += v[0] + v[1];  // ~ Beta(2, 4) mean = 1/3
    }
    CHECK(sum / reps == doctest::Approx(1.0 / 3.0).epsilon(0.015));
  }
  CHECK_THROWS_AS(sample_dirichlet({1.0, 0.0}, rng), std::invalid_argument);
}

TEST_CASE("gamma sampler moments") {
  RngStream rng(23);
  for (double shape : {0.6, 1.0, 4.2}) {
    double sum = 0.0;
    const int reps = 200000;
    for (int r = 0; r < reps; ++r) {
      RngStream rr = rng.substream(static_cast<std::uint64_t>(r) + 31 * static_cast<std::uint64_t>(shape * 100));
      sum += rr.gamma(shape);
    }
    CHECK(sum / reps == doctest::Approx(shape).epsilon(0.02));
  }
}
