#pragma once

namespace lfd {

// Standard normal CDF, computed through erfc for full tail accuracy.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse of normal_cdf on (0, 1); rational initial guess polished by
// Newton steps, accurate to a few ulp away from the extreme tails.
double normal_quantile(double p);

// sqrt(p(1-p)/n) with the estimate clamped into [0, 1] first.
double binomial_std_error(double p_hat, double n);

}  // namespace lfd
