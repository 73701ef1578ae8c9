#pragma once

#include <vector>

#include "qmt/rng.hpp"

namespace qmt {

// Order statistics of n iid Uniform(0,1) draws, generated directly in
// sorted order from exponential spacings. Marginal of entry k (1-based)
// is Beta(k, n+1-k).
void sample_uniform_order_stats(int n, RngStream& rng, std::vector<double>& out);
std::vector<double> sample_uniform_order_stats(int n, RngStream& rng);

// Dirichlet draw via normalized gammas; fractional shapes allowed.
std::vector<double> sample_dirichlet(const std::vector<double>& shapes, RngStream& rng);

}  // namespace qmt
