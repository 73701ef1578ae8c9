#pragma once

#include <stdexcept>

namespace qmt {

// Raised when an iterative routine fails to converge. Callers that own a
// process boundary (the CLI) map this to a distinct exit code.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape parameters of a Beta(k, m) distribution. In the order-statistic
// setting m = n+1-k, but fractional shapes are legal (the two-sample
// quantile machinery needs them).
struct BetaParams {
  double k;
  double m;
};

// Regularized incomplete beta I_x(k, m). Absolute accuracy ~1e-14.
double beta_cdf(const BetaParams& p, double x);
double beta_pdf(const BetaParams& p, double x);

// Inverse of beta_cdf in x: Newton iteration with a bisection safeguard.
double beta_quantile(const BetaParams& p, double q);

inline double beta_cdf(double k, double m, double x) { return beta_cdf(BetaParams{k, m}, x); }
inline double beta_quantile(double k, double m, double q) { return beta_quantile(BetaParams{k, m}, q); }

// P(Binomial(n, p) <= m), exact via the beta identity.
double binomial_cdf(long m, long n, double p);

double normal_cdf(double x);
double normal_quantile(double q);

// Limiting distribution of the scaled two-sided KS statistic:
// survival Q(x) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_survival(double x);

// c with Q(c) = alpha, e.g. c(0.1) = 1.2238.
double kolmogorov_critical(double alpha);

}  // namespace qmt
