#pragma once

#include <string>
#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/rejection.hpp"

namespace qmt {

// Tested quantile indices per order statistic: ell[k-1] and u[k-1] are
// the tail and 1-tail quantiles of Beta(k, n+1-k). A one-sided grid only
// fills the vector it uses.
struct QuantileGrid {
  int n = 0;
  double tail = 0.0;
  std::vector<double> ell;
  std::vector<double> u;
};

QuantileGrid build_grid(int n, const Calibration& calib);
QuantileGrid build_grid_tail(int n, double tail, Sides sides = Sides::two_sided);

struct Mtp1Result {
  RejectionSet rejections;
  QuantileGrid grid;
  Calibration calibration;
  bool had_ties = false;
};

// Multiple testing of H0tau across all tau in (0,1) against a fixed null
// model: order statistic k rejects below when X_{n:k} < F0^{-1}(ell_k)
// and above when X_{n:k} > F0^{-1}(u_k); monotonicity of the quantile
// function extends each pointwise rejection to an interval of tau.
Mtp1Result run_mtp_1s(const Sample& sample, const NullModel& null, const Calibration& calib);

struct PValue {
  double value = 1.0;
  bool censored_low = false;   // true means "p < value"
  bool censored_high = false;  // true means "p > value"

  std::string display() const;
};

// Goodness-of-fit p-value: the familywise level at which the procedure is
// exactly on the edge of rejecting this dataset, obtained by inverting
// the pointwise-level approximation formula.
PValue gof_pvalue_1s(const Sample& sample, const NullModel& null, Sides sides);

// Step-function confidence band for an unknown CDF with exact 1-alpha
// coverage. lower(x) = ell_{#obs <= x}, upper(x) = u_{#obs <= x + 1} with
// ell_0 = 0 and u_{n+1} = 1.
struct Band {
  std::vector<double> x;      // sorted sample values
  std::vector<double> lower;  // value on [x_k, x_{k+1})
  std::vector<double> upper;
  double lower_left = 0.0;  // band on (-inf, x_1): [0, upper_left]
  double upper_left = 0.0;

  // Evaluate the envelope at a point.
  double lower_at(double v) const;
  double upper_at(double v) const;
  // True when cdf stays inside the band everywhere.
  bool covers(const NullModel& cdf) const;

  std::string to_csv() const;
};

Band confidence_band_1s(const Sample& sample, double alpha);
Band band_from_grid(const Sample& sample, const QuantileGrid& grid);

}  // namespace qmt
