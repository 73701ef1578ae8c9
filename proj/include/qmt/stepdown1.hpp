#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/mtp1.hpp"
#include "qmt/rejection.hpp"

namespace qmt {

struct StepTrace {
  int iteration = 0;
  int active_lower = 0;
  int active_upper = 0;
  int moves = 0;  // assignment changes committed by the greedy pass
  int new_rejections = 0;
  std::uint64_t assignment_digest = 0;
};

std::string trace_to_json(const std::vector<StepTrace>& trace);

struct StepdownOptions {
  long long draws = 20000;            // shared draw set for the joint constraint
  std::uint64_t seed = 0x51ab1eULL;   // draw-set seed; never depends on the data
  int max_iterations = 50;
  int threads = 0;
};

// Rejected tau range produced by one hypothesis/statistic pair, before
// mapping into value space.
struct TauInterval {
  Side side = Side::below;
  double lo = 0.0;
  double hi = 0.0;
  int hypothesis = 0;  // index k of the tested quantile ell_k or u_k
  int statistic = 0;   // order-statistic index assigned when it fired
};

struct StepdownResult {
  RejectionSet rejections;
  std::vector<TauInterval> raw;  // unmerged tau-space rejections
  std::vector<StepTrace> trace;
  // Final order-statistic assignment per hypothesis index (1-based,
  // 0 where the hypothesis is not on the corresponding roster).
  std::vector<int> r_lower;
  std::vector<int> r_upper;
};

// Shared, data-independent machinery for the stepdown search: the fixed
// uniform draw set, the grid, and per-hypothesis violation counts by
// order-statistic position. Building one engine and reusing it across
// datasets (as the simulation harness does) keeps the greedy search a
// pure function of the active sets.
class StepdownEngine {
 public:
  StepdownEngine(const QuantileGrid& grid, Sides sides, double alpha,
                 const StepdownOptions& opt);
  ~StepdownEngine();
  StepdownEngine(StepdownEngine&&) noexcept;

  // f0x = null CDF evaluated at the sorted sample. Roster vectors list the
  // hypothesis indices still in play (1-based); initial_greedy runs the
  // reassignment before the first testing pass (the pre-test composition
  // starts from a reduced roster).
  StepdownResult run(const std::vector<double>& f0x, std::vector<int> roster_lower,
                     std::vector<int> roster_upper, bool initial_greedy) const;

  const QuantileGrid& grid() const;
  Sides sides() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-sided stepdown (and the two-sided variant when calib.sides is
// two_sided): iteratively retests the surviving hypotheses with more
// favorable order statistics while a simulated joint constraint keeps the
// familywise rate at alpha. Output always contains the basic procedure's
// rejections.
StepdownResult stepdown_1s(const Sample& sample, const NullModel& null,
                           const Calibration& calib, const StepdownOptions& opt = {});

// Data-independent part of the pre-test: its own calibrated level and
// the order-statistic assignment. Reused across datasets by the
// simulation harness.
struct PretestPlan {
  double alpha_p = 0.0;
  double tilde_alpha_p = 0.0;  // calibrated per-tail level of the screen
  int boundary_k = 0;          // first (lower main) or last (upper main) testable index
  std::vector<int> assignment;  // r_k per hypothesis, 0 where untestable
  Sides main_sides = Sides::lower;
};

PretestPlan plan_pretest(const QuantileGrid& main_grid, Sides main_sides, double alpha_p,
                         const StepdownOptions& opt = {});

struct PretestResult {
  PretestPlan plan;
  std::vector<int> survivors;  // hypothesis indices not rejected by the pre-test
  RejectionSet rejections;     // opposite-direction rejections
};

PretestResult apply_pretest(const PretestPlan& plan, const QuantileGrid& main_grid,
                            const std::vector<double>& x_sorted,
                            const std::vector<double>& f0x, const NullModel& null);

// Screen for slack constraints: tests the reversed one-sided hypotheses
// at level alpha_p and reports the survivors. main_sides names the
// direction of the main procedure whose grid is screened.
PretestResult pretest_1s(const Sample& sample, const NullModel& null, double alpha_p,
                         Sides main_sides, const Calibration& main_calib,
                         const StepdownOptions& opt = {});

inline double default_pretest_level(double alpha, int n) {
  return alpha / std::log(std::log(std::max(n, 15)));
}

// Pre-test, reassignment restricted to the survivors, then stepdown.
// Familywise rate is bounded by alpha + alpha_p.
StepdownResult pretest_then_stepdown_1s(const Sample& sample, const NullModel& null,
                                        const Calibration& calib,
                                        const StepdownOptions& opt = {});

}  // namespace qmt
