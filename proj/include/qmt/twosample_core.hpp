#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/rng.hpp"

namespace qmt {

// Between consecutive pooled order statistics both empirical CDFs are
// constant, so whether any value in that segment is rejected depends only
// on the counts (i, j) of X and Y observations to the left. For each
// count pair this table stores the smallest per-tail level at which the
// bands separate there; a dataset first rejects at the minimum of the
// thresholds along its pooled ordering. That turns calibration into a
// one-pass scan per simulated ordering.
class SegmentThresholds {
 public:
  static SegmentThresholds build(int n_x, int n_y, Sides sides);

  double at(int i, int j) const { return t_[static_cast<size_t>(i) * (n_y_ + 1) + j]; }
  int n_x() const { return n_x_; }
  int n_y() const { return n_y_; }
  Sides sides() const { return sides_; }

  // Smallest per-tail level at which the pattern (true = X) triggers any
  // rejection; +inf when no level below 0.5 does.
  double pattern_critical(const std::vector<std::uint8_t>& pattern) const;

 private:
  int n_x_ = 0, n_y_ = 0;
  Sides sides_ = Sides::two_sided;
  std::vector<double> t_;
};

// Per-tail level at which the lower band of a sample of size n_a with i
// observations left of the segment crosses above the upper band of a
// sample of size n_b with j observations left. +inf when impossible.
double band_cross_threshold(int i, int n_a, int j, int n_b);

// Uniformly random ordering pattern of n_x X's and n_y Y's.
void sample_pattern(int n_x, int n_y, RngStream& rng, std::vector<std::uint8_t>& out);

// Number of orderings, saturating at `cap`.
unsigned long long count_orderings(int n_x, int n_y, unsigned long long cap);

// Visit every ordering pattern exactly once.
void enumerate_patterns(int n_x, int n_y,
                        const std::function<void(const std::vector<std::uint8_t>&)>& visit);

}  // namespace qmt
