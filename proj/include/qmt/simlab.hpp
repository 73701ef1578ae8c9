#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qmt/calibration.hpp"
#include "qmt/data.hpp"
#include "qmt/rng.hpp"

namespace qmt {

// Data generating process described through its quantile function.
class Dgp {
 public:
  static Dgp uniform(double a, double b);
  static Dgp normal(double mu, double sigma);
  // Monotone piecewise-linear quantile through (tau, q) knots covering
  // [0, 1]; floor_values produces an integer-valued step distribution.
  static Dgp piecewise_quantile(std::vector<std::pair<double, double>> knots,
                                bool floor_values);

  double quantile(double tau) const;
  // Right-continuous CDF, obtained by inverting the quantile function.
  double cdf(double r) const;
  double draw(RngStream& rng) const;

 private:
  std::function<double(double)> quantile_;
};

struct SimCell {
  std::string method;
  double value = 0.0;
  double stderr_value = 0.0;
};

struct SimReport {
  std::string scenario;
  long long replications = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> row_labels;
  std::vector<std::vector<SimCell>> rows;

  const SimCell& cell(const std::string& row, const std::string& method) const;
  std::string to_json() const;
  std::string to_csv() const;
};

// Familywise error rate tables. Scenario names: "table1" (one-sample,
// two-sided, null true), "table2" (one-sample, one-sided, stepdown and
// pre-test variants), "table3" (two-sample, two-sided, null true),
// "table4" (two-sample quantile tasks, one-sided).
SimReport run_fwer_table(const std::string& scenario, long long replications, RngStream rng,
                         int threads = 0);

struct RpCurve {
  std::string method;
  int n = 0;
  double alpha = 0.0;
  std::vector<double> rp;          // by order statistic k = 1..n
  double stderr_at(size_t k) const;
  long long replications = 0;
  std::string to_csv() const;
};

// Per-order-statistic rejection probability under the null, by method
// ("dirichlet" one-sided, "dirichlet2" two-sided, "ks", "weighted_ks").
RpCurve run_pointwise_rp(const std::string& method, int n, double alpha,
                         long long replications, RngStream rng, int threads = 0);

// Global power of the goodness-of-fit tests against normal alternatives,
// null N(0,1), n = 100 (values in percent).
SimReport run_power_table(long long replications, RngStream rng, int threads = 0);

// Simulation on the bundled synthetic quantile tables ("library" or
// "fundraising"): familywise error rate and global power of the basic
// two-sample procedure, the KS baseline, and the quantile-task variants.
SimReport run_empirical_dgp(const std::string& task, const std::string& data_dir,
                            long long replications, RngStream rng, int threads = 0);

}  // namespace qmt
