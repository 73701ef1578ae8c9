#pragma once

#include <string>
#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/rejection.hpp"
#include "qmt/twosample_core.hpp"

namespace qmt {

// Step-function envelopes for both CDFs over the pooled sample, constant
// between consecutive pooled order statistics.
struct TwoSampleBands {
  std::vector<double> breakpoints;  // pooled sorted unique values
  std::vector<double> lower_x, upper_x, lower_y, upper_y;  // on [b_i, b_{i+1})
  double tail = 0.0;

  std::string to_csv() const;
};

TwoSampleBands build_bands_2s(const Sample& x, const Sample& y, const Calibration& calib);

struct Mtp2Result {
  RejectionSet rejections;  // value-space intervals, witness = segment index
  TwoSampleBands bands;
  Calibration calibration;
  bool had_cross_ties = false;
};

// Two-sample multiple testing of H0r across all r: reject wherever the
// two bands fail to overlap. Rejection only depends on the ordering of
// the pooled sample, so the calibrated level is a function of
// (alpha, n_x, n_y) alone.
Mtp2Result run_mtp_2s(const Sample& x, const Sample& y, const Calibration& calib);

// Largest pointwise level at which this dataset shows no rejection
// anywhere (capped at 1, meaning no level below the cap rejects). The
// goodness-of-fit p-value is the null probability of a level at most as
// large, by simulation or enumeration of the orderings.
double critical_level_2s(const Sample& x, const Sample& y, Sides sides);

struct Gof2Result {
  double p_value = 1.0;
  double critical_level = 1.0;
  bool exhaustive = false;
};

Gof2Result gof_pvalue_2s(const Sample& x, const Sample& y, Sides sides,
                         TwoSampleScheme scheme, long long M, RngStream rng,
                         int threads = 0);

// Diagnostic reproducing the failure of strong quantile-level control:
// a degenerate X at the common median against a two-point Y. Reports the
// calibrated level and the resulting quantile familywise error rate in
// the limit, which exceeds alpha.
struct QuantileCounterexample {
  double alpha = 0.0;
  int n_x = 0, n_y = 0;
  double tilde_alpha = 0.0;   // calibrated by full enumeration
  double step_edge = 0.0;
  int m_upper = 0;            // smallest m with lower Y band above 1/2
  int m_lower = 0;            // largest m with upper Y band below 1/2
  double quantile_fwer = 0.0;  // exact binomial limit
};

QuantileCounterexample quantile_fwer_counterexample_check(double alpha, int n_x, int n_y);

}  // namespace qmt
