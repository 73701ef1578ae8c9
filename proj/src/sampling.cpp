#include "qmt/sampling.hpp"

#include <stdexcept>

namespace qmt {

void sample_uniform_order_stats(int n, RngStream& rng, std::vector<double>& out) {
  if (n < 1) throw std::invalid_argument("sample_uniform_order_stats: n < 1");
  out.resize(static_cast<size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += rng.exponential();
    out[static_cast<size_t>(i)] = acc;
  }
  acc += rng.exponential();
  const double inv = 1.0 / acc;
  for (double& v : out) v *= inv;
}

std::vector<double> sample_uniform_order_stats(int n, RngStream& rng) {
  std::vector<double> out;
  sample_uniform_order_stats(n, rng, out);
  return out;
}

std::vector<double> sample_dirichlet(const std::vector<double>& shapes, RngStream& rng) {
  if (shapes.empty()) throw std::invalid_argument("sample_dirichlet: empty shapes");
  std::vector<double> out(shapes.size());
  double total = 0.0;
  for (size_t i = 0; i < shapes.size(); ++i) {
    if (!(shapes[i] > 0.0)) throw std::invalid_argument("sample_dirichlet: nonpositive shape");
    out[i] = rng.gamma(shapes[i]);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace qmt
