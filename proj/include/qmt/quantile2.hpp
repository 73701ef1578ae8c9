#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/rejection.hpp"

namespace qmt {

// Joint confidence intervals for quantile differences at a small grid of
// quantile indices tau_j = j/(M+1), M = floor(min(n_x, n_y)^{2/5}).
// Experimental: the familywise guarantees here are asymptotic heuristics,
// verified empirically rather than proven.
struct QuantileTaskOptions {
  int m_count = 0;            // number of tested quantiles; 0 = size-based rule
  long long calib_draws = 30000;
  std::uint64_t seed = 0xd15cULL;
  int max_iterations = 50;
  int threads = 0;
};

struct QuantileCi {
  double tau = 0.0;
  double delta_lo = 0.0;  // CI for F_Y^{-1}(tau) - F_X^{-1}(tau)
  double delta_hi = 0.0;
  bool rejected = false;
};

struct QuantileTaskResult {
  std::vector<QuantileCi> cis;       // state after the final iteration
  std::vector<int> rejected_js;      // 1-based indices of rejected hypotheses
  RejectionSet rejections;           // degenerate tau intervals, one per rejected j
  double tilde_alpha_final = 0.0;    // pointwise level of the last calibration
  int iterations = 0;
  int pretest_rejections = 0;
  // True when the joint coverage target could not be reached with every
  // index inside (0, n+1); the run proceeded at the feasibility edge.
  bool coverage_shortfall = false;
};

// Cache of calibrated levels keyed by the active-set bitmask; share one
// instance across replications with identical configuration.
class QuantileCalibCache {
 public:
  bool get(std::uint64_t key, double& out) const;
  void put(std::uint64_t key, double v);

 private:
  std::map<std::uint64_t, double> map_;
};

QuantileTaskResult joint_quantile_ci_2s(const Sample& x, const Sample& y, double alpha,
                                        Sides sides, const QuantileTaskOptions& opt = {},
                                        QuantileCalibCache* cache = nullptr);

QuantileTaskResult stepdown_2s(const Sample& x, const Sample& y, double alpha, Sides sides,
                               const QuantileTaskOptions& opt = {},
                               QuantileCalibCache* cache = nullptr);

// One-sided only: screens the reversed hypotheses at
// alpha_p = alpha / log(log(max(n, 15))) and runs the stepdown from the
// surviving set.
QuantileTaskResult pretest_then_stepdown_2s(const Sample& x, const Sample& y, double alpha,
                                            Sides sides, const QuantileTaskOptions& opt = {},
                                            QuantileCalibCache* cache = nullptr,
                                            QuantileCalibCache* pretest_cache = nullptr);

}  // namespace qmt
