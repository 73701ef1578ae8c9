#pragma once

#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/rejection.hpp"
#include "qmt/rng.hpp"

namespace qmt {

enum class KsMode { exact, asymptotic };

struct KsResult {
  double statistic = 0.0;       // scaled sup statistic
  double critical_value = 0.0;  // same scale
  double p_value = 1.0;
  RejectionSet rejections;
  bool exact = false;
};

// Scaled one-sample statistic sqrt(n) * sup |F_hat - F0| (or the signed
// one-sided versions) from the sorted null-CDF values of the sample.
double ks_stat_1s(const std::vector<double>& f0x_sorted, Sides sides);

// Weighted variant dividing by sqrt(F0(1-F0)) at every sample point;
// returns +inf when a sample point sits at a null CDF value of 0 or 1,
// where any reasonable test rejects outright.
double weighted_ks_stat_1s(const std::vector<double>& f0x_sorted);

// Scaled two-sample statistic from an ordering pattern (true = X).
double ks_stat_pattern_2s(const std::vector<std::uint8_t>& pattern, int n_x, int n_y,
                          Sides sides);

// Distribution-free critical values. Exact ones are Monte Carlo quantiles
// over uniform samples (one-sample) or orderings (two-sample; enumerated
// when feasible); the returned value is the smallest attainable c with
// P(D > c) <= alpha, which makes discrete cases conservative.
double ks_exact_critical_1s(int n, double alpha, Sides sides, long long reps, RngStream rng,
                            int threads = 0);
double ks_asymptotic_critical(double alpha, Sides sides);
double ks_exact_critical_2s(int n_x, int n_y, double alpha, Sides sides, long long reps,
                            RngStream rng, int threads = 0);
double weighted_ks_critical_1s(int n, double alpha, long long reps, RngStream rng,
                               int threads = 0);

KsResult ks_mtp_1s(const Sample& sample, const NullModel& null, double alpha, Sides sides,
                   KsMode mode, long long mc_reps = 1000000, RngStream rng = RngStream(0x5eed),
                   int threads = 0);

KsResult ks_mtp_2s(const Sample& x, const Sample& y, double alpha, Sides sides, KsMode mode,
                   long long mc_reps = 200000, RngStream rng = RngStream(0x5eed),
                   int threads = 0);

KsResult weighted_ks_mtp_1s(const Sample& sample, const NullModel& null, double alpha,
                            long long mc_reps = 1000000, RngStream rng = RngStream(0x5eed),
                            int threads = 0);

}  // namespace qmt
