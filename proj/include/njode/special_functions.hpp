#pragma once

namespace njode {

/// log I_q(z) for real order q >= 0 and z >= 0. Uses the power series in
/// log space (log-sum-exp) for z <= 500 and the large-argument asymptotic
/// z - log(2 pi z)/2 + log1p(-(4q^2 - 1)/(8z)) beyond. For very large orders
/// the first-order correction turns the log1p argument below -1 and the
/// result is NaN; callers treat non-finite densities as zero weight.
/// z = 0 returns 0 for q = 0 and -inf for q > 0.
double log_bessel_i(double q, double z);

/// Standard normal CDF, |error| <= 1e-12 over the real line.
double normal_cdf(double x);

}  // namespace njode
