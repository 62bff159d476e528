#pragma once

// Scalar special functions and exact discrete tails. Everything is in nats
// and log-domain where underflow is a concern; no external math libraries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lrd/errors.hpp"

namespace lrd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_gamma(double x) {
#if defined(__GLIBC__) || defined(__APPLE__)
    int sign = 0;
    return ::lgamma_r(x, &sign);  // thread-safe, x > 0 here so sign is +1
#else
    return std::lgamma(x);
#endif
}

inline double log_factorial(std::int64_t n) {
    return log_gamma(static_cast<double>(n) + 1.0);
}

// ln C(n, k); -inf outside the triangle.
inline double log_binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return kNegInf;
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double log_multinomial(std::int64_t n, std::span<const std::int64_t> counts) {
    double r = log_factorial(n);
    for (std::int64_t c : counts) r -= log_factorial(c);
    return r;
}

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    long double s = 0.0L;
    for (double x : xs) s += std::exp(static_cast<long double>(x - m));
    return m + static_cast<double>(std::log(s));
}

// ---------------------------------------------------------------------------
// Standard normal upper tail and its inverse.

inline double normal_upper_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Upper-tail quantile by bisection on the erfc-based tail, |z| tol 1e-12.
inline double normal_upper_quantile(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw domain_error("normal_upper_quantile: eps must be in (0,1)");
    double lo = -40.0, hi = 40.0;
    while (hi - lo > 1e-13) {
        double mid = 0.5 * (lo + hi);
        if (normal_upper_tail(mid) > eps) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma (series + Lentz continued fraction).

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a, del = sum;
    for (int i = 0; i < 100000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 100000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace detail

// P(a,x) = gamma(a,x)/Gamma(a), lower regularized.
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw domain_error("gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw domain_error("gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

inline double chi_square_upper_tail(double dof, double x) {
    return gamma_q(0.5 * dof, 0.5 * x);
}

// x with Pr{ChiSq_dof > x} = eps, by bisection.
inline double chi_square_upper_quantile(double dof, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw domain_error("chi_square_upper_quantile: eps in (0,1)");
    double hi = dof + 10.0;
    while (chi_square_upper_tail(dof, hi) > eps) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-11 * (1.0 + hi); ++i) {
        double mid = 0.5 * (lo + hi);
        if (chi_square_upper_tail(dof, mid) > eps) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta.

namespace detail {

inline double ibeta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        double m2 = 2.0 * m;
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
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-17) break;
    }
    return h;
}

}  // namespace detail

// I_x(a, b)
inline double ibeta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw domain_error("ibeta: need a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(ln_front) * detail::ibeta_cf(a, b, x) / a;
    return 1.0 - std::exp(ln_front) * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

inline double ibeta_inv(double a, double b, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        double mid = 0.5 * (lo + hi);
        if (ibeta(a, b, mid) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Exact binomial pmf/tails and the Clopper-Pearson interval.

inline double log_binomial_pmf(std::int64_t n, std::int64_t k, double p) {
    if (k < 0 || k > n) return kNegInf;
    if (p <= 0.0) return k == 0 ? 0.0 : kNegInf;
    if (p >= 1.0) return k == n ? 0.0 : kNegInf;
    return log_binomial(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
}

// Pr{Bin(n,p) > k}, exact through the incomplete beta identity.
inline double binomial_upper_tail(std::int64_t n, double p, std::int64_t k) {
    if (k < 0) return 1.0;
    if (k >= n) return 0.0;
    return ibeta(static_cast<double>(k + 1), static_cast<double>(n - k), p);
}

// Smallest k with Pr{Bin(n,p) > k} <= eps.
inline std::int64_t binomial_upper_quantile(std::int64_t n, double p, double eps) {
    std::int64_t lo = -1, hi = n;  // tail(-1) = 1 > eps (eps < 1), tail(n) = 0 <= eps
    while (hi - lo > 1) {
        std::int64_t mid = lo + (hi - lo) / 2;
        if (binomial_upper_tail(n, p, mid) <= eps) hi = mid; else lo = mid;
    }
    return hi;
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Exact two-sided Clopper-Pearson interval at the given confidence level.
inline Interval clopper_pearson(std::int64_t successes, std::int64_t trials, double confidence) {
    if (trials <= 0 || successes < 0 || successes > trials)
        throw domain_error("clopper_pearson: bad counts");
    double alpha = 1.0 - confidence;
    Interval iv;
    iv.lo = successes == 0 ? 0.0
                           : ibeta_inv(static_cast<double>(successes),
                                       static_cast<double>(trials - successes + 1), alpha / 2.0);
    iv.hi = successes == trials
                ? 1.0
                : ibeta_inv(static_cast<double>(successes + 1),
                            static_cast<double>(trials - successes), 1.0 - alpha / 2.0);
    return iv;
}

// One-sided upper bound on a Bernoulli parameter from successes/trials.
inline double clopper_pearson_upper(std::int64_t successes, std::int64_t trials, double confidence) {
    if (successes >= trials) return 1.0;
    return ibeta_inv(static_cast<double>(successes + 1),
                     static_cast<double>(trials - successes), confidence);
}

// ---------------------------------------------------------------------------
// Hypergeometric overlap tails (log domain; values can be far below 1e-300).

// ln Pr{overlap = a} when drawing m marked-or-not items: population n with
// k special positions, a of the m drawn land on special positions.
inline double log_hypergeometric_pmf(std::int64_t n, std::int64_t k, std::int64_t m, std::int64_t a) {
    return log_binomial(k, a) + log_binomial(n - k, m - a) - log_binomial(n, m);
}

// ln Pr{overlap >= a_min}
inline double log_hypergeometric_upper_tail(std::int64_t n, std::int64_t k, std::int64_t m,
                                            std::int64_t a_min) {
    std::int64_t a_lo = std::max<std::int64_t>(a_min, std::max<std::int64_t>(0, m - (n - k)));
    std::int64_t a_hi = std::min(k, m);
    if (a_lo > a_hi) return kNegInf;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(a_hi - a_lo + 1));
    for (std::int64_t a = a_lo; a <= a_hi; ++a)
        terms.push_back(log_hypergeometric_pmf(n, k, m, a));
    return log_sum_exp(terms);
}

}  // namespace lrd
