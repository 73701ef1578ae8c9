#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace qmt {

// One sample of scalar observations. Raw order is preserved (the
// permutation-based schemes need it); `sorted` holds the order statistics.
class Sample {
 public:
  explicit Sample(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& sorted() const { return sorted_; }
  int n() const { return static_cast<int>(values_.size()); }

  // Number of tied adjacent pairs among the order statistics. Ties make
  // the procedures conservative rather than invalid; callers may warn.
  int tie_count() const { return ties_; }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
  int ties_ = 0;
};

// A fully specified null distribution, exposed through its quantile
// function and CDF. Table-backed models interpolate monotonically between
// the given (tau, q) pairs and refuse to extrapolate.
class NullModel {
 public:
  static NullModel uniform(double a, double b);
  static NullModel normal(double mu, double sigma);
  static NullModel table(std::vector<std::pair<double, double>> tau_q);
  static NullModel custom(std::function<double(double)> quantile,
                          std::function<double(double)> cdf,
                          std::string label = "custom");

  double quantile(double tau) const;
  double cdf(double x) const;
  const std::string& label() const { return label_; }

 private:
  NullModel() = default;
  std::function<double(double)> quantile_;
  std::function<double(double)> cdf_;
  std::string label_;
};

}  // namespace qmt
