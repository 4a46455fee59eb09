#pragma once

#include <cstdint>

namespace opf::stats {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double x, double a, double b);

/// Inverse of I_x(a, b) in x; solves I_x(a, b) = q by bisection to ~1e-13.
double incomplete_beta_inv(double q, double a, double b);

/// P[X <= k] for X ~ Binomial(n, p). Exact via the beta identity
/// P[X <= k] = I_{1-p}(n - k, k + 1); log-domain safe for large n.
double binomial_cdf(std::int64_t k, std::int64_t n, double p);

/// Smallest k with P[X <= k] >= q for X ~ Binomial(n, p).
std::int64_t binomial_quantile(double q, std::int64_t n, double p);

struct Interval {
    double lower;
    double upper;
};

/// Clopper-Pearson bounds for a binomial proportion after observing
/// `successes` out of `trials`. Each endpoint is a one-sided exact bound at
/// level eta: P[p < lower] <= eta and P[p > upper] <= eta.
/// successes == 0 gives lower 0 and upper 1 - eta^(1/trials);
/// successes == trials gives upper 1 and lower eta^(1/trials).
Interval clopper_pearson(std::int64_t successes, std::int64_t trials, double eta);

}  // namespace opf::stats
