#pragma once

// Rate-distortion functions, source dispersion, and finite-blocklength
// normal-approximation rates for the two supported source classes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "lrd/errors.hpp"
#include "lrd/math.hpp"

namespace lrd {

enum class SourceKind : std::uint8_t { discrete = 0, gaussian = 1 };

// A memoryless source: finite-alphabet pmf with distortion matrix, or a
// zero-mean Gaussian with variance. All rates derived from it are in nats.
struct SourceModel {
    SourceKind kind = SourceKind::discrete;
    std::vector<double> pmf;                          // discrete only
    std::vector<std::vector<double>> distortion;      // m x m_hat, discrete only
    double variance = 0.0;                            // gaussian only

    static SourceModel bernoulli(double p) {
        SourceModel s;
        s.kind = SourceKind::discrete;
        s.pmf = {1.0 - p, p};
        s.distortion = {{0.0, 1.0}, {1.0, 0.0}};
        s.validate();
        return s;
    }

    static SourceModel discrete(std::vector<double> pmf, std::vector<std::vector<double>> d) {
        SourceModel s;
        s.kind = SourceKind::discrete;
        s.pmf = std::move(pmf);
        s.distortion = std::move(d);
        s.validate();
        return s;
    }

    static SourceModel gaussian(double variance) {
        SourceModel s;
        s.kind = SourceKind::gaussian;
        s.variance = variance;
        s.validate();
        return s;
    }

    bool is_bernoulli() const {
        return kind == SourceKind::discrete && pmf.size() == 2 && distortion.size() == 2 &&
               distortion[0].size() == 2 && distortion[0][0] == 0.0 && distortion[0][1] == 1.0 &&
               distortion[1][0] == 1.0 && distortion[1][1] == 0.0;
    }

    double bernoulli_p() const { return pmf.at(1); }

    double d_max() const {
        double m = 0.0;
        for (const auto& row : distortion)
            for (double v : row) m = std::max(m, v);
        return m;
    }

    void validate() const {
        if (kind == SourceKind::gaussian) {
            if (!(variance > 0.0)) throw domain_error("SourceModel: variance must be > 0");
            return;
        }
        if (pmf.size() < 2) throw domain_error("SourceModel: alphabet size must be >= 2");
        double sum = 0.0;
        for (double p : pmf) {
            if (!(p > 0.0)) throw domain_error("SourceModel: pmf entries must be strictly positive");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-12) throw domain_error("SourceModel: pmf must sum to 1");
        if (distortion.size() != pmf.size())
            throw domain_error("SourceModel: distortion matrix row count != alphabet size");
        std::size_t cols = distortion.front().size();
        if (cols == 0) throw domain_error("SourceModel: distortion matrix has no columns");
        for (const auto& row : distortion) {
            if (row.size() != cols) throw domain_error("SourceModel: ragged distortion matrix");
            for (double v : row)
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw domain_error("SourceModel: distortion entries must be finite and >= 0");
        }
    }
};

struct RateDispersion {
    double rate = 0.0;        // nats per symbol
    double dispersion = 0.0;  // nats^2 per symbol
};

// Standard-normal upper-tail quantile.
inline double q_inv(double epsilon) { return normal_upper_quantile(epsilon); }

// Binary entropy in nats, with 0 ln 0 = 0.
inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw domain_error("binary_entropy: p must be in [0,1]");
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
    return h;
}

// R(p, D) for Bern(p) under Hamming distortion; p > 1/2 reduces by symmetry.
inline double rd_binary(double p, double D) {
    if (!(p >= 0.0 && p <= 1.0)) throw domain_error("rd_binary: p must be in [0,1]");
    if (!(D >= 0.0)) throw domain_error("rd_binary: D must be >= 0");
    if (p > 0.5) p = 1.0 - p;
    if (D >= p) return 0.0;
    return binary_entropy(p) - binary_entropy(D);
}

// R(sigma^2, D) for the Gaussian source under quadratic distortion.
inline double rd_gaussian(double variance, double D) {
    if (!(variance > 0.0)) throw domain_error("rd_gaussian: variance must be > 0");
    if (!(D > 0.0)) throw domain_error("rd_gaussian: D must be > 0");
    return std::max(0.0, 0.5 * std::log(variance / D));
}

// Closed-form source dispersion. Binary value is D-independent on (0, p);
// Gaussian is 1/2 for all D <= sigma^2 and 0 above.
inline double dispersion(const SourceModel& source, double D) {
    if (source.kind == SourceKind::gaussian) {
        if (!(D > 0.0)) throw domain_error("dispersion: D must be > 0");
        return D <= source.variance ? 0.5 : 0.0;
    }
    if (!source.is_bernoulli())
        throw domain_error("dispersion: closed form available for Bernoulli and Gaussian only");
    double p = source.bernoulli_p();
    if (p > 0.5) p = 1.0 - p;
    if (!(D > 0.0)) throw domain_error("dispersion: D must be > 0");
    if (D >= p) return 0.0;  // rate function identically zero in a neighborhood
    double lr = std::log((1.0 - p) / p);
    return p * (1.0 - p) * lr * lr;
}

// ---------------------------------------------------------------------------
// Blahut-Arimoto, parameterized by the Lagrange slope with an outer bisection
// on the slope to hit the target distortion.

namespace detail {

struct BaPoint {
    double rate = 0.0;
    double distortion = 0.0;
};

// Alternating minimization at fixed slope beta >= 0. Log-domain conditionals
// keep large beta stable.
inline BaPoint ba_fixed_slope(const std::vector<double>& pmf,
                              const std::vector<std::vector<double>>& d, double beta, double tol,
                              std::int64_t max_iters) {
    std::size_t m = pmf.size(), mh = d.front().size();
    std::vector<double> log_q(mh, -std::log(static_cast<double>(mh)));
    std::vector<double> log_w(m * mh, 0.0);
    double prev_rate = std::numeric_limits<double>::infinity();
    BaPoint pt;
    for (std::int64_t it = 0; it < max_iters; ++it) {
        // W(xh|x) proportional to q(xh) exp(-beta d(x,xh))
        for (std::size_t x = 0; x < m; ++x) {
            double mx = kNegInf;
            for (std::size_t h = 0; h < mh; ++h) {
                double v = log_q[h] - beta * d[x][h];
                log_w[x * mh + h] = v;
                mx = std::max(mx, v);
            }
            double z = 0.0;
            for (std::size_t h = 0; h < mh; ++h) z += std::exp(log_w[x * mh + h] - mx);
            double log_z = mx + std::log(z);
            for (std::size_t h = 0; h < mh; ++h) log_w[x * mh + h] -= log_z;
        }
        // q(xh) = sum_x P(x) W(xh|x)
        for (std::size_t h = 0; h < mh; ++h) {
            double acc = 0.0;
            for (std::size_t x = 0; x < m; ++x) acc += pmf[x] * std::exp(log_w[x * mh + h]);
            log_q[h] = acc > 0.0 ? std::log(acc) : kNegInf;
        }
        double rate = 0.0, dist = 0.0;
        for (std::size_t x = 0; x < m; ++x)
            for (std::size_t h = 0; h < mh; ++h) {
                double lw = log_w[x * mh + h];
                if (lw == kNegInf || log_q[h] == kNegInf) continue;
                double w = std::exp(lw);
                if (w <= 0.0) continue;
                rate += pmf[x] * w * (lw - log_q[h]);
                dist += pmf[x] * w * d[x][h];
            }
        pt.rate = std::max(0.0, rate);
        pt.distortion = dist;
        if (std::fabs(rate - prev_rate) < tol) return pt;
        prev_rate = rate;
    }
    throw convergence_error("blahut_arimoto: inner loop did not converge", pt.rate);
}

}  // namespace detail

// Numeric R(P, D) in nats. pmf entries may be zero (dropped); tol is the
// inner-loop rate tolerance. Outer bisection targets D within 1e-9.
inline double blahut_arimoto(const std::vector<double>& pmf_in,
                             const std::vector<std::vector<double>>& d_in, double D,
                             double tol = 1e-12) {
    if (!(tol > 0.0)) throw domain_error("blahut_arimoto: tol must be > 0");
    if (pmf_in.empty() || d_in.size() != pmf_in.size())
        throw domain_error("blahut_arimoto: pmf/distortion shape mismatch");
    // drop zero-probability symbols and renormalize
    std::vector<double> pmf;
    std::vector<std::vector<double>> d;
    double sum = 0.0;
    for (std::size_t x = 0; x < pmf_in.size(); ++x) {
        if (pmf_in[x] < 0.0) throw domain_error("blahut_arimoto: negative pmf entry");
        if (pmf_in[x] > 0.0) {
            pmf.push_back(pmf_in[x]);
            d.push_back(d_in[x]);
            sum += pmf_in[x];
        }
    }
    if (pmf.empty() || !(sum > 0.0)) throw domain_error("blahut_arimoto: pmf is all zero");
    for (double& p : pmf) p /= sum;

    std::size_t mh = d.front().size();
    double d_min = 0.0;
    for (std::size_t x = 0; x < pmf.size(); ++x) {
        double row_min = *std::min_element(d[x].begin(), d[x].end());
        d_min += pmf[x] * row_min;
    }
    double d_max = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < mh; ++h) {
        double col = 0.0;
        for (std::size_t x = 0; x < pmf.size(); ++x) col += pmf[x] * d[x][h];
        d_max = std::min(d_max, col);
    }
    if (D > d_max + 1e-12 || D < d_min - 1e-12)
        throw domain_error("blahut_arimoto: D outside [D_min, D_max]");
    if (D >= d_max - 1e-12) return 0.0;
    if (D <= d_min + 1e-12) {
        // zero-rate slack is gone; the limit is H(P) when the per-symbol
        // minimizing columns are distinct (Hamming-like matrices)
        double h = 0.0;
        for (double p : pmf) h -= p * std::log(p);
        return h;
    }

    const std::int64_t max_iters = 100000;
    double beta_lo = 0.0, beta_hi = 1.0;
    while (detail::ba_fixed_slope(pmf, d, beta_hi, tol, max_iters).distortion > D) {
        beta_hi *= 2.0;
        if (beta_hi > 1e9) break;
    }
    detail::BaPoint pt;
    for (int i = 0; i < 200; ++i) {
        double beta = 0.5 * (beta_lo + beta_hi);
        pt = detail::ba_fixed_slope(pmf, d, beta, tol, max_iters);
        if (std::fabs(pt.distortion - D) <= 1e-9) return pt.rate;
        if (pt.distortion > D) beta_lo = beta; else beta_hi = beta;
    }
    return pt.rate;
}

// Coordinate derivatives of the simplex extension R(v/|v|, D) by symmetric
// finite differences; feeding them to variance_of gives V(P, D).
inline std::vector<double> rd_derivatives_numeric(const std::vector<double>& pmf,
                                                  const std::vector<std::vector<double>>& d,
                                                  double D, double step = 1e-4) {
    if (!(step > 0.0)) throw domain_error("rd_derivatives_numeric: step must be > 0");
    auto extension = [&](std::vector<double> v) {
        double s = std::accumulate(v.begin(), v.end(), 0.0);
        for (double& x : v) x /= s;
        return blahut_arimoto(v, d, D, 1e-13);
    };
    std::vector<double> g(pmf.size());
    for (std::size_t x = 0; x < pmf.size(); ++x) {
        std::vector<double> hi = pmf, lo = pmf;
        hi[x] += step;
        lo[x] -= step;
        g[x] = (extension(hi) - extension(lo)) / (2.0 * step);
    }
    return g;
}

// Var_P(g); the centered form makes the shift invariance g -> g + c exact.
inline double variance_of(const std::vector<double>& pmf, const std::vector<double>& g) {
    if (pmf.size() != g.size()) throw domain_error("variance_of: size mismatch");
    double mean = 0.0;
    for (std::size_t x = 0; x < pmf.size(); ++x) mean += pmf[x] * g[x];
    double var = 0.0;
    for (std::size_t x = 0; x < pmf.size(); ++x) var += pmf[x] * (g[x] - mean) * (g[x] - mean);
    return var;
}

// V(P, D) by finite differences of blahut_arimoto along a simplex extension.
inline double dispersion_numeric(const std::vector<double>& pmf,
                                 const std::vector<std::vector<double>>& d, double D,
                                 double step = 1e-4) {
    return variance_of(pmf, rd_derivatives_numeric(pmf, d, D, step));
}

// Closed-form R(D) for the supported source classes.
inline double rate_distortion(const SourceModel& source, double D) {
    if (source.kind == SourceKind::gaussian) return rd_gaussian(source.variance, D);
    if (source.is_bernoulli()) return rd_binary(source.bernoulli_p(), D);
    return blahut_arimoto(source.pmf, source.distortion, D);
}

// R(D) + sqrt(V(D)/n) Q^{-1}(eps): the normal approximation with no
// O(log n / n) term.
inline double finite_n_rate(const SourceModel& source, double D, double epsilon, std::int64_t n) {
    if (n < 1) throw domain_error("finite_n_rate: n must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("finite_n_rate: eps in (0,1)");
    double r = rate_distortion(source, D);
    double v = dispersion(source, D);
    return r + std::sqrt(v / static_cast<double>(n)) * q_inv(epsilon);
}

}  // namespace lrd
