#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmt/rng.hpp"

namespace qmt {

// Which tail(s) the order-statistic tests use. `lower` tests with the
// ell-grid and detects quantiles below the reference (one-sample: F^{-1}
// below F0^{-1}; two-sample: F_X^{-1} below F_Y^{-1}); `upper` is the
// mirror image.
enum class Sides { lower, upper, two_sided };

const char* to_string(Sides s);
Sides sides_from_string(const std::string& s);

struct McMeta {
  long long replications = 0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  // Two-sample: location of the FWER step edge before the safety margin
  // was subtracted.
  double step_edge = 0.0;
};

// The pointwise level tilde_alpha is the size of each order statistic's
// own test: a two-sided procedure tests each tail at tilde_alpha/2, a
// one-sided procedure tests its single tail at tilde_alpha.
struct Calibration {
  double alpha = 0.0;
  double tilde_alpha = 0.0;
  Sides sides = Sides::two_sided;
  int n_x = 0;
  int n_y = 0;  // 0 for one-sample
  enum class Source { formula, monte_carlo, table } source = Source::formula;
  std::optional<McMeta> mc_meta;
  bool interpolated = false;
  // Two-sample: attainable FWER just below and just above the chosen
  // level (the calibration step brackets the target).
  double alpha_low = 0.0;
  double alpha_high = 0.0;

  // Per-tail quantile level used to build grids and bands.
  double tail() const { return sides == Sides::two_sided ? 0.5 * tilde_alpha : tilde_alpha; }

  std::string to_json() const;
  static Calibration from_json(const std::string& text);
};

// Closed-form approximation to the two-sided pointwise level for a target
// familywise rate alpha at sample size n. Domain n >= 4; accuracy is
// documented for alpha in [0.001, 0.9] (callers may warn outside).
double tilde_alpha_formula(double alpha, long n);

// Map a one-sided familywise level to the two-sided level it corresponds
// to: alpha2 = 2*alpha1 - alpha1^2.
double one_sided_adjust(double alpha1);

// Formula-backed calibration for the one-sample procedures. One-sided
// levels go through one_sided_adjust first and use half the two-sided
// pointwise level as their single-tail size.
Calibration calibrate_formula_1s(double alpha, int n, Sides sides);

// Replication/tolerance pair for the Monte Carlo search, derived from a
// relative FWER slack c and a one-sided search confidence p:
//   T = c*alpha - qnorm(1-p) * sqrt(a'(1-a')/M),  a' = alpha(1+c).
struct CalibAccuracy {
  double c = 0.02;
  double p = 0.05;
  long long replications = 200000;
  double tolerance = 0.0;  // derived when <= 0

  double derived_tolerance(double alpha) const;
  // Defaults reproducing the documented tolerances: c=0.02 with M=2e5 for
  // alpha in {0.05, 0.1}; c=0.05 with M=1e6 for alpha=0.01.
  static CalibAccuracy for_alpha(double alpha);
};

// Fraction of M simulated uniform order-statistic samples violating the
// grid implied by tilde_alpha (convention as in Calibration::tail).
// Deterministic given the rng state; replications are partitioned by
// index, so the thread count does not change the result.
double simulate_fwer_1s(double tilde_alpha, int n, Sides sides, long long M, RngStream rng,
                        int threads = 0);

// Monotone bisection of tilde_alpha against the simulated FWER, reusing
// one fixed draw set across iterations (common random numbers). Stops
// when |fwer_hat - alpha| < T.
Calibration tilde_alpha_mc_1s(double alpha, int n, Sides sides, const CalibAccuracy& acc,
                              RngStream rng, int threads = 0);

enum class TwoSampleScheme { uniform_sim, permutation };

// Two-sample calibration: the largest pointwise level whose simulated
// FWER stays at or below alpha, minus a 0.0001 safety margin against the
// discreteness of the attainable levels. `permutation` enumerates all
// orderings when there are at most 200000 of them, otherwise samples
// them; `uniform_sim` draws independent uniform samples.
Calibration tilde_alpha_mc_2s(double alpha, int n_x, int n_y, Sides sides,
                              TwoSampleScheme scheme, long long M, RngStream rng,
                              int threads = 0);

struct ReferenceTableRow {
  double alpha = 0.0;
  int n_x = 0;
  int n_y = 0;
  double tilde_alpha = 0.0;
  double alpha_low = 0.0;
  double alpha_high = 0.0;
};

// CSV-backed table of precomputed two-sample levels. Lookups may
// interpolate in the sample sizes (never in alpha); interpolated results
// are flagged on the returned Calibration.
class ReferenceTable {
 public:
  ReferenceTable() = default;
  static ReferenceTable load(const std::string& path);
  void save(const std::string& path) const;  // write temp file, then rename
  void upsert(const ReferenceTableRow& row);
  Calibration lookup(double alpha, int n_x, int n_y, bool interpolate_n = false) const;
  const std::vector<ReferenceTableRow>& rows() const { return rows_; }

 private:
  std::vector<ReferenceTableRow> rows_;
};

}  // namespace qmt
