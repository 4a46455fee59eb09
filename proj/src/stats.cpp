#include "opf/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace opf::stats {

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta function (modified Lentz).
// Converges fast for x < (a + 1) / (a + b + 2).
double beta_cf(double x, double a, double b) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(ln_front) * beta_cf(x, a, b) / a;
    }
    return 1.0 - std::exp(ln_front) * beta_cf(1.0 - x, b, a) / b;
}

double incomplete_beta_inv(double q, double a, double b) {
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    // I_x is strictly increasing in x; plain bisection is robust everywhere.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (incomplete_beta(mid, a, b) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial_cdf: n < 0");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_cdf: p outside [0,1]");
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    return incomplete_beta(1.0 - p, static_cast<double>(n - k), static_cast<double>(k + 1));
}

std::int64_t binomial_quantile(double q, std::int64_t n, double p) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("binomial_quantile: q outside (0,1)");
    std::int64_t lo = 0;
    std::int64_t hi = n;
    if (binomial_cdf(0, n, p) >= q) return 0;
    while (lo + 1 < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (binomial_cdf(mid, n, p) >= q) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

Interval clopper_pearson(std::int64_t successes, std::int64_t trials, double eta) {
    if (trials < 1) throw std::invalid_argument("clopper_pearson: trials < 1");
    if (successes < 0 || successes > trials) {
        throw std::invalid_argument("clopper_pearson: successes outside [0, trials]");
    }
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("clopper_pearson: eta outside (0,1)");
    const double v = static_cast<double>(successes);
    const double m = static_cast<double>(trials);
    Interval iv{};
    iv.lower = (successes == 0) ? 0.0 : incomplete_beta_inv(eta, v, m - v + 1.0);
    iv.upper = (successes == trials) ? 1.0 : incomplete_beta_inv(1.0 - eta, v + 1.0, m - v);
    return iv;
}

}  // namespace opf::stats
