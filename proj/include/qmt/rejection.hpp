#pragma once

#include <string>
#include <vector>

namespace qmt {

// Direction of the evidence behind a rejected interval.
//   One-sample, quantile space: below = F^{-1}(tau) < F0^{-1}(tau)
//   (triggered by small order statistics), above = the opposite.
//   Two-sample, value space: below = F_X^{-1} < F_Y^{-1} at the covered
//   values, i.e. the X band lies above the Y band there.
enum class Side { below, above };

inline const char* to_string(Side s) { return s == Side::below ? "below" : "above"; }

struct RejectionInterval {
  Side side = Side::below;
  // Half-open [lo, hi) in tau space; NaN when the procedure works in
  // value space only (two-sample).
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  // Image in value space, same openness.
  double r_lo = 0.0;
  double r_hi = 0.0;
  // Order-statistic index (one-sample) or pooled segment index
  // (two-sample) that triggered the interval.
  int witness = 0;
};

struct RejectionSet {
  std::vector<RejectionInterval> intervals;

  bool empty() const { return intervals.empty(); }

  // Does any rejected tau interval intersect [lo, hi]?
  bool any_tau_in(double lo, double hi) const;
  // Same in value space.
  bool any_r_in(double lo, double hi) const;

  // All rejections of `other` are contained in this set (used to check
  // that the power boosters only add rejections).
  bool contains(const RejectionSet& other) const;

  std::string to_json() const;
  static RejectionSet from_json(const std::string& text);
};

// Merge overlapping or touching intervals of equal side. Assumes each
// input interval is nonempty; keeps the witness of the interval whose
// lower endpoint survives.
std::vector<RejectionInterval> merge_intervals(std::vector<RejectionInterval> raw);

// Contiguity shape restriction: fill the gaps between rejected intervals
// (per side) with additional rejections. Never removes a rejection.
RejectionSet apply_shape_restriction(const RejectionSet& rej);

}  // namespace qmt
