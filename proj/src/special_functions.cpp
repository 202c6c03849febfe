#include "njode/special_functions.hpp"

#include <cmath>
#include <limits>

#include "njode/errors.hpp"

namespace njode {

double log_bessel_i(double q, double z) {
    if (!(q >= 0.0) || !std::isfinite(q) || !std::isfinite(z) || z < 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    if (z == 0.0) return (q == 0.0) ? 0.0 : -std::numeric_limits<double>::infinity();

    if (z <= 500.0) {
        // sum_k (z/2)^(2k+q) / (k! Gamma(k+q+1)) in log space
        const double lh = std::log(0.5 * z);
        double max_term = -std::numeric_limits<double>::infinity();
        // the dominant k is near ((sqrt(q^2+z^2) - q)/2); cap the loop well past it
        const int k_max = 64 + static_cast<int>(z) + static_cast<int>(std::sqrt(z) * 8.0);
        double lse = 0.0;
        // two passes: locate the max log-term, then accumulate exp shifts
        for (int pass = 0; pass < 2; ++pass) {
            double acc = 0.0;
            for (int k = 0; k <= k_max; ++k) {
                const double lt = (2.0 * k + q) * lh - std::lgamma(k + 1.0) - std::lgamma(k + q + 1.0);
                if (pass == 0) {
                    if (lt > max_term) max_term = lt;
                } else {
                    acc += std::exp(lt - max_term);
                }
            }
            if (pass == 1) lse = max_term + std::log(acc);
        }
        return lse;
    }
    // uniform asymptotic with first-order correction
    const double corr = -(4.0 * q * q - 1.0) / (8.0 * z);
    return z - 0.5 * std::log(2.0 * M_PI * z) + std::log1p(corr);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace njode
