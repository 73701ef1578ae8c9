#include <doctest.h>

#include <vector>

#include "qmt/extensions.hpp"
#include "qmt/sampling.hpp"

using namespace qmt;

namespace {

Calibration small_calib(double alpha, int nx, int ny) {
  RngStream rng(167);
  return tilde_alpha_mc_2s(alpha, nx, ny, Sides::two_sided, TwoSampleScheme::permutation,
                           100000, rng);
}

}  // namespace

TEST_CASE("nearest-neighbor selection around the cutoff") {
  RdSpec spec;
  spec.z = {-3.0, -1.0, -0.5, 0.2, 0.9, 4.0};
  spec.y = {10, 11, 12, 20, 21, 22};
  spec.cutoff = 0.0;
  spec.q = 2;
  const LocalSamples ls = rd_select(spec);
  CHECK(ls.left == std::vector<double>{12, 11});   // |z| = 0.5, then 1.0
  CHECK(ls.right == std::vector<double>{20, 21});  // z = 0.2, then 0.9
}

TEST_CASE("selection is invariant to scaling the running variable") {
  RngStream rng(173);
  RdSpec spec;
  for (int i = 0; i < 40; ++i) {
    spec.z.push_back(rng.uniform() * 2.0 - 1.0);
    spec.y.push_back(rng.normal());
  }
  spec.cutoff = 0.0;
  spec.q = 8;
  const LocalSamples a = rd_select(spec);
  RdSpec scaled = spec;
  for (auto& z : scaled.z) z *= 37.5;
  const LocalSamples b = rd_select(scaled);
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
}

TEST_CASE("values at the cutoff go right, and shortages are an error") {
  RdSpec spec;
  spec.z = {-1.0, 0.0, 1.0};
  spec.y = {1, 2, 3};
  spec.cutoff = 0.0;
  spec.q = 2;
  CHECK_THROWS_AS(rd_select(spec), std::invalid_argument);  // left has only one
  spec.q = 1;
  const LocalSamples ls = rd_select(spec);
  CHECK(ls.right[0] == 2.0);  // the z = 0 point is on the right side
}

TEST_CASE("rd delegates exactly to the two-sample procedure") {
  RngStream rng(179);
  RdSpec spec;
  for (int i = 0; i < 60; ++i) {
    spec.z.push_back(rng.uniform() * 2.0 - 1.0);
    spec.y.push_back(rng.uniform() + (spec.z.back() >= 0 ? 0.8 : 0.0));
  }
  spec.cutoff = 0.0;
  spec.q = 12;
  const Calibration c = small_calib(0.1, 12, 12);
  const auto via_rd = rd_mtp(spec, c);
  const LocalSamples ls = rd_select(spec);
  const auto direct = run_mtp_2s(Sample(ls.left), Sample(ls.right), c);
  CHECK(via_rd.rejections.to_json() == direct.rejections.to_json());
}

TEST_CASE("rd familywise rate under a locally flat design") {
  // outcome distribution identical within a window on each side
  RngStream rng(181);
  const Calibration c = small_calib(0.1, 10, 10);
  int hits = 0;
  const int reps = 3000;
  for (int r = 0; r < reps; ++r) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
    RdSpec spec;
    spec.cutoff = 0.0;
    spec.q = 10;
    for (int i = 0; i < 60; ++i) {
      spec.z.push_back(rr.uniform() * 2.0 - 1.0);
      spec.y.push_back(rr.uniform());  // same law on both sides
    }
    hits += !rd_mtp(spec, c).rejections.empty();
  }
  CHECK(static_cast<double>(hits) / reps <= 0.1 + 0.02);
}

TEST_CASE("discrete covariates dominate the distance ordering") {
  CondSpec spec;
  spec.x0 = {0.0, 0.0, 1.0};
  spec.weights = {1.0, 1.0, 1e6};
  // one exact discrete match far away in the continuous part, one
  // mismatch arbitrarily close otherwise
  spec.y = {1.0, 2.0, 3.0, 4.0};
  spec.t = {0, 0, 1, 1};
  spec.x = {{5.0, 5.0, 1.0}, {0.0, 0.0, 0.0}, {9.0, 9.0, 1.0}, {0.01, 0.0, 0.0}};
  spec.q0 = 1;
  spec.q1 = 1;
  const LocalSamples ls = conditional_select(spec);
  CHECK(ls.left[0] == 1.0);   // discrete match wins despite distance
  CHECK(ls.right[0] == 3.0);
}

TEST_CASE("pure discrete covariates recover the exact cell") {
  CondSpec spec;
  spec.x0 = {1.0};
  spec.y = {10, 20, 30, 40, 50, 60};
  spec.t = {0, 0, 0, 1, 1, 1};
  spec.x = {{1.0}, {0.0}, {1.0}, {1.0}, {1.0}, {0.0}};
  spec.q0 = 2;
  spec.q1 = 2;
  const LocalSamples ls = conditional_select(spec);
  CHECK(ls.left == std::vector<double>{10, 30});
  CHECK(ls.right == std::vector<double>{40, 50});
}

TEST_CASE("conditional familywise rate under equal conditional laws") {
  RngStream rng(191);
  const int q = 25;
  const Calibration c = small_calib(0.1, q, q);
  int hits = 0;
  const int reps = 1500;
  for (int r = 0; r < reps; ++r) {
    RngStream rr = rng.substream(static_cast<std::uint64_t>(r));
    CondSpec spec;
    spec.x0 = {0.0};
    spec.q0 = spec.q1 = q;
    for (int i = 0; i < 400; ++i) {
      const double xv = rr.uniform() * 2.0 - 1.0;
      spec.x.push_back({xv});
      spec.t.push_back(i % 2);
      spec.y.push_back(rr.uniform());  // conditional law does not depend on x or t
    }
    hits += !conditional_mtp(spec, c).rejections.empty();
  }
  CHECK(static_cast<double>(hits) / reps <= 0.1 + 0.025);
}

TEST_CASE("insufficient arm counts raise") {
  CondSpec spec;
  spec.x0 = {0.0};
  spec.y = {1.0, 2.0};
  spec.t = {0, 0};
  spec.x = {{0.1}, {0.2}};
  spec.q0 = 1;
  spec.q1 = 1;
  CHECK_THROWS_AS(conditional_select(spec), std::invalid_argument);
}
