#include <doctest.h>

#include <cmath>
#include <vector>

#include "qmt/sampling.hpp"
#include "qmt/special.hpp"
#include "qmt/stepdown1.hpp"

using namespace qmt;

namespace {

StepdownOptions quick_options() {
  StepdownOptions opt;
  opt.draws = 5000;
  return opt;
}

}  // namespace

TEST_CASE("no initial rejection means the stepdown equals the basic run") {
  const int n = 30;
  std::vector<double> xs;
  for (int k = 1; k <= n; ++k) xs.push_back(k / (n + 1.0));
  const Sample s(xs);
  const NullModel null = NullModel::uniform(0, 1);
  const Calibration calib = calibrate_formula_1s(0.1, n, Sides::lower);
  const auto basic = run_mtp_1s(s, null, calib);
  const auto sd = stepdown_1s(s, null, calib, quick_options());
  CHECK(basic.rejections.empty());
  CHECK(sd.rejections.empty());
  CHECK(sd.trace.size() == 1);
  CHECK(sd.trace[0].moves == 0);
}

TEST_CASE("stepdown output contains the basic rejections") {
  const int n = 40;
  RngStream rng(51);
  const NullModel null = NullModel::uniform(0, 1);
  const Calibration calib = calibrate_formula_1s(0.2, n, Sides::lower);
  int nonempty = 0;
  std::vector<double> u;
  for (int rep = 0; rep < 30; ++rep) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(rep));
    sample_uniform_order_stats(n, rr, u);
    // shift the lower third down to create real signal
    for (int i = 0; i < n / 3; ++i) u[static_cast<size_t>(i)] *= 0.4;
    std::sort(u.begin(), u.end());
    const Sample s(u);
    const auto basic = run_mtp_1s(s, null, calib);
    const auto sd = stepdown_1s(s, null, calib, quick_options());
    CHECK(sd.rejections.contains(basic.rejections));
    nonempty += !basic.rejections.empty();
  }
  CHECK(nonempty > 0);
}

TEST_CASE("stepdown assignments stay monotone across iterations") {
  const int n = 25;
  RngStream rng(53);
  const NullModel null = NullModel::uniform(0, 1);
  const Calibration calib = calibrate_formula_1s(0.2, n, Sides::lower);
  std::vector<double> u;
  RngStream rr = rng.substream(8);
  sample_uniform_order_stats(n, rr, u);
  for (int i = 0; i < n / 2; ++i) u[static_cast<size_t>(i)] *= 0.25;
  std::sort(u.begin(), u.end());
  const auto sd = stepdown_1s(Sample(u), null, calib, quick_options());
  // final assignment never exceeds the identity on the lower side
  for (int k = 1; k <= n; ++k) {
    const int r = sd.r_lower[static_cast<size_t>(k)];
    if (r != 0) CHECK(r <= k);
  }
  CHECK_FALSE(sd.trace.empty());
  const std::string j = trace_to_json(sd.trace);
  CHECK(j.find("assignment_digest") != std::string::npos);
}

TEST_CASE("two-sided stepdown keeps both lists ordered and is a superset") {
  const int n = 30;
  RngStream rng(55);
  const NullModel null = NullModel::uniform(0, 1);
  const Calibration calib = calibrate_formula_1s(0.2, n, Sides::two_sided);
  std::vector<double> u;
  for (int rep = 0; rep < 10; ++rep) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(rep));
    sample_uniform_order_stats(n, rr, u);
    for (auto& v : u) v = std::pow(v, 1.6);  // skew downwards
    std::sort(u.begin(), u.end());
    const Sample s(u);
    const auto basic = run_mtp_1s(s, null, calib);
    const auto sd = stepdown_1s(s, null, calib, quick_options());
    CHECK(sd.rejections.contains(basic.rejections));
    for (int k = 1; k <= n; ++k) {
      if (sd.r_lower[static_cast<size_t>(k)] != 0) CHECK(sd.r_lower[static_cast<size_t>(k)] <= k);
      if (sd.r_upper[static_cast<size_t>(k)] != 0) CHECK(sd.r_upper[static_cast<size_t>(k)] >= k);
    }
  }
}

TEST_CASE("pretest level rule") {
  CHECK(default_pretest_level(0.1, 100) == doctest::Approx(0.1 / std::log(std::log(100.0))).epsilon(1e-12));
  CHECK(default_pretest_level(0.1, 100) == doctest::Approx(0.0655).epsilon(0.01));
  // small n clamps at 15
  CHECK(default_pretest_level(0.1, 5) == doctest::Approx(0.1 / std::log(std::log(15.0))).epsilon(1e-12));
}

TEST_CASE("pretest keeps null-consistent data intact") {
  const int n = 30;
  // main side lower: pre-test screens for data far above the null
  std::vector<double> xs;
  for (int k = 1; k <= n; ++k) xs.push_back(0.2 * k / (n + 1.0));  // all far below
  const Sample s(xs);
  const NullModel null = NullModel::uniform(0, 1);
  const Calibration calib = calibrate_formula_1s(0.1, n, Sides::lower);
  const auto pre = pretest_1s(s, null, 0.05, Sides::lower, calib, quick_options());
  CHECK(pre.survivors.size() == static_cast<size_t>(n));
  CHECK(pre.rejections.empty());
}

TEST_CASE("pretest screen holds its level") {
  const int n = 50;
  const double alpha_p = default_pretest_level(0.1, n);
  const Calibration calib = calibrate_formula_1s(0.1, n, Sides::lower);
  const QuantileGrid grid = build_grid(n, calib);
  StepdownOptions opt;
  opt.draws = 50000;
  const PretestPlan plan = plan_pretest(grid, Sides::lower, alpha_p, opt);
  CHECK(plan.boundary_k > 0);
  // under the null the screen rejects with probability ~ alpha_p
  const NullModel null = NullModel::uniform(0, 1);
  RngStream rng(61);
  const int reps = 30000;
  int any = 0;
  std::vector<double> u;
  for (int r = 0; r < reps; ++r) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
    sample_uniform_order_stats(n, rr, u);
    const auto res = apply_pretest(plan, grid, u, u, null);
    any += !res.rejections.empty();
  }
  const double rate = static_cast<double>(any) / reps;
  CHECK(rate == doctest::Approx(alpha_p).epsilon(0.12));
}

TEST_CASE("pretest composition reduces to the stepdown when nothing is screened out") {
  const int n = 20;
  std::vector<double> xs;
  for (int k = 1; k <= n; ++k) xs.push_back(0.3 * k / (n + 1.0));
  const Sample s(xs);
  const NullModel null = NullModel::uniform(0, 1);
  const Calibration calib = calibrate_formula_1s(0.1, n, Sides::lower);
  const auto pre = pretest_1s(s, null, default_pretest_level(0.1, n), Sides::lower, calib,
                              quick_options());
  REQUIRE(pre.survivors.size() == static_cast<size_t>(n));
  const auto ps = pretest_then_stepdown_1s(s, null, calib, quick_options());
  const auto sd = stepdown_1s(s, null, calib, quick_options());
  // same roster, same draws: identical rejections up to the initial
  // reassignment pass, which can only add
  CHECK(ps.rejections.contains(sd.rejections));
}

TEST_CASE("shape restriction fills gaps and keeps single intervals") {
  RejectionSet rs;
  rs.intervals.push_back({Side::below, 0.1, 0.2, 8.0, 14.0, 3});
  rs.intervals.push_back({Side::below, 0.3, 0.4, 21.0, 26.0, 7});
  const RejectionSet hull = apply_shape_restriction(rs);
  REQUIRE(hull.intervals.size() == 1);
  CHECK(hull.intervals[0].r_lo == doctest::Approx(8.0));
  CHECK(hull.intervals[0].r_hi == doctest::Approx(26.0));

  RejectionSet single;
  single.intervals.push_back({Side::above, 0.5, 0.6, 1.0, 2.0, 1});
  const RejectionSet same = apply_shape_restriction(single);
  REQUIRE(same.intervals.size() == 1);
  CHECK(same.intervals[0].r_lo == doctest::Approx(1.0));
  CHECK(same.intervals[0].r_hi == doctest::Approx(2.0));

  CHECK(apply_shape_restriction(RejectionSet{}).empty());
}
