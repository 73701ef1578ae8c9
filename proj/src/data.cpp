#include "qmt/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmt/special.hpp"

namespace qmt {

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("Sample: empty");
  for (double v : values_) {
    if (std::isnan(v)) throw std::invalid_argument("Sample: NaN observation");
  }
  sorted_ = values_;
  std::sort(sorted_.begin(), sorted_.end());
  for (size_t i = 1; i < sorted_.size(); ++i) {
    if (sorted_[i] == sorted_[i - 1]) ++ties_;
  }
}

NullModel NullModel::uniform(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("uniform null: need b > a");
  NullModel m;
  m.quantile_ = [a, b](double tau) { return a + tau * (b - a); };
  m.cdf_ = [a, b](double x) {
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    return (x - a) / (b - a);
  };
  m.label_ = "uniform";
  return m;
}

NullModel NullModel::normal(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("normal null: need sigma > 0");
  NullModel m;
  m.quantile_ = [mu, sigma](double tau) { return mu + sigma * normal_quantile(tau); };
  m.cdf_ = [mu, sigma](double x) { return normal_cdf((x - mu) / sigma); };
  m.label_ = "normal";
  return m;
}

NullModel NullModel::table(std::vector<std::pair<double, double>> tau_q) {
  if (tau_q.size() < 2) throw std::invalid_argument("table null: need at least two rows");
  std::sort(tau_q.begin(), tau_q.end());
  for (size_t i = 1; i < tau_q.size(); ++i) {
    if (!(tau_q[i].first > tau_q[i - 1].first)) {
      throw std::invalid_argument("table null: tau values must be strictly increasing");
    }
    if (tau_q[i].second < tau_q[i - 1].second) {
      throw std::invalid_argument("table null: quantile values must be nondecreasing");
    }
  }
  auto pts = std::make_shared<std::vector<std::pair<double, double>>>(std::move(tau_q));
  NullModel m;
  m.quantile_ = [pts](double tau) {
    const auto& p = *pts;
    if (tau < p.front().first || tau > p.back().first) {
      throw std::invalid_argument("table null: quantile extrapolation is not allowed");
    }
    auto it = std::lower_bound(p.begin(), p.end(), tau,
                               [](const auto& a, double t) { return a.first < t; });
    if (it->first == tau) return it->second;
    auto prev = std::prev(it);
    const double w = (tau - prev->first) / (it->first - prev->first);
    return prev->second + w * (it->second - prev->second);
  };
  m.cdf_ = [pts](double x) {
    const auto& p = *pts;
    if (x < p.front().second || x > p.back().second) {
      throw std::invalid_argument("table null: cdf extrapolation is not allowed");
    }
    auto it = std::lower_bound(p.begin(), p.end(), x,
                               [](const auto& a, double v) { return a.second < v; });
    if (it == p.begin()) return it->first;
    auto prev = std::prev(it);
    if (it->second == prev->second) return it->first;
    const double w = (x - prev->second) / (it->second - prev->second);
    return prev->first + w * (it->first - prev->first);
  };
  m.label_ = "table";
  return m;
}

NullModel NullModel::custom(std::function<double(double)> quantile,
                            std::function<double(double)> cdf, std::string label) {
  NullModel m;
  m.quantile_ = std::move(quantile);
  m.cdf_ = std::move(cdf);
  m.label_ = std::move(label);
  return m;
}

double NullModel::quantile(double tau) const { return quantile_(tau); }
double NullModel::cdf(double x) const { return cdf_(x); }

}  // namespace qmt
