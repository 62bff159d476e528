#pragma once

// Constructive covering codebooks: Hamming-ball covering of type classes,
// Euclidean sphere covering, successive (D1,D2)-covering, shell-radius and
// type-threshold selectors, plus the exact single-codeword cover-probability
// kernels that back the generator-based codebooks in the layered module.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lrd/errors.hpp"
#include "lrd/math.hpp"
#include "lrd/ratedist.hpp"
#include "lrd/rng.hpp"
#include "lrd/types.hpp"

namespace lrd {

// ---------------------------------------------------------------------------
// Bit-packed binary rows.

struct BitMatrix {
    std::uint32_t n = 0;  // bits per row
    std::size_t words_per_row = 0;
    std::vector<std::uint64_t> words;

    explicit BitMatrix(std::uint32_t n_ = 0) : n(n_), words_per_row((n_ + 63) / 64) {}

    std::size_t rows() const { return words_per_row == 0 ? 0 : words.size() / words_per_row; }

    std::uint64_t* row(std::size_t i) { return words.data() + i * words_per_row; }
    const std::uint64_t* row(std::size_t i) const { return words.data() + i * words_per_row; }

    std::size_t append_zero_row() {
        words.resize(words.size() + words_per_row, 0);
        return rows() - 1;
    }

    std::size_t append_row(const std::uint64_t* src) {
        std::size_t r = append_zero_row();
        std::memcpy(row(r), src, words_per_row * sizeof(std::uint64_t));
        return r;
    }
};

inline std::int64_t hamming_distance(const std::uint64_t* a, const std::uint64_t* b,
                                     std::size_t words) {
    std::int64_t d = 0;
    for (std::size_t w = 0; w < words; ++w) d += std::popcount(a[w] ^ b[w]);
    return d;
}

inline std::int64_t word_weight(const std::uint64_t* a, std::size_t words) {
    std::int64_t d = 0;
    for (std::size_t w = 0; w < words; ++w) d += std::popcount(a[w]);
    return d;
}

inline void set_bit(std::uint64_t* row, std::size_t i) { row[i >> 6] |= 1ULL << (i & 63); }
inline bool get_bit(const std::uint64_t* row, std::size_t i) {
    return (row[i >> 6] >> (i & 63)) & 1ULL;
}

// Uniform word of weight m over n positions.
inline void sample_weight_word(Rng& rng, std::vector<std::int32_t>& pool, std::uint32_t n,
                               std::int64_t m, std::uint64_t* out, std::size_t words) {
    std::fill(out, out + words, 0ULL);
    rng.sample_prefix(pool, n, static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) set_bit(out, static_cast<std::size_t>(pool[i]));
}

// Iterates all n-bit words of weight k (Gosper's hack), n <= 62.
template <typename F>
inline void for_each_weight_word(std::uint32_t n, std::int64_t k, F&& f) {
    if (n > 62) throw size_error("for_each_weight_word: n too large for exhaustive enumeration");
    if (k == 0) {
        std::uint64_t z = 0;
        f(&z);
        return;
    }
    std::uint64_t v = (1ULL << k) - 1;
    std::uint64_t limit = 1ULL << n;
    while (v < limit) {
        f(&v);
        std::uint64_t t = v | (v - 1);
        v = (t + 1) | (((~t & (t + 1)) - 1) >> (std::countr_zero(v) + 1));
    }
}

// ---------------------------------------------------------------------------
// Cover-probability kernels.

// ln Pr{ d_H(y, C) <= t } for one center C uniform on the weight-m type
// class, with |y| = k. Overlap a must satisfy k + m - 2a <= t.
inline double log_hamming_cover_prob(std::int64_t n, std::int64_t k, std::int64_t m,
                                     std::int64_t t) {
    std::int64_t a_min = (k + m - t + 1) / 2;  // ceil((k+m-t)/2)
    if (a_min < 0) a_min = 0;
    return log_hypergeometric_upper_tail(n, k, m, a_min);
}

// Center weight maximizing the cover probability, searched around the
// reproduction type (w - D) / (1 - 2D) of the binary test channel.
inline std::int64_t best_center_weight(std::int64_t n, std::int64_t k, std::int64_t t) {
    if (k <= t) return 0;  // the zero word already covers
    double w = static_cast<double>(k) / n, D = static_cast<double>(t) / n;
    double ideal = D < 0.5 ? n * (w - D) / (1.0 - 2.0 * D) : 0.0;
    std::int64_t center = std::clamp<std::int64_t>(std::llround(ideal), 0, n);
    std::int64_t lo = std::max<std::int64_t>(0, center - 8), hi = std::min<std::int64_t>(n, center + 8);
    if (n <= 64) { lo = 0; hi = n; }
    std::int64_t best_m = lo;
    double best = kNegInf;
    for (std::int64_t m = lo; m <= hi; ++m) {
        double v = log_hamming_cover_prob(n, k, m, t);
        if (v > best) { best = v; best_m = m; }
    }
    return best_m;
}

// ln of the fraction of the n-ball of radius rho lying at signed distance
// >= x*rho from the center along a fixed axis.
inline double log_ball_cap_fraction(std::int64_t n, double frac) {
    if (frac <= -1.0) return 0.0;
    if (frac >= 1.0) return kNegInf;
    double y = 1.0 - frac * frac;
    double a = 0.5 * (n + 1), b = 0.5;
    if (frac >= 0.0) {
        // 0.5 * I_y(a, b), kept in logs because I_y can be far below 1e-300
        double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(y) +
                          b * std::log1p(-y);
        double v;
        if (y < (a + 1.0) / (a + b + 2.0)) {
            v = ln_front + std::log(detail::ibeta_cf(a, b, y)) - std::log(a);
        } else {
            double other = ln_front + std::log(detail::ibeta_cf(b, a, 1.0 - y)) - std::log(b);
            v = other >= 0.0 ? kNegInf : std::log1p(-std::exp(other));
        }
        return std::log(0.5) + v;
    }
    double upper = std::exp(log_ball_cap_fraction(n, -frac));
    return std::log1p(-upper);
}

// ln [ vol(B(y, r) ∩ B(0, R)) / vol(B(0, R)) ] with d = |y|. This is the
// probability that a center uniform in B(0, R) covers y at radius r.
inline double log_ball_lens_fraction(std::int64_t n, double d, double R, double r) {
    if (!(R > 0.0) || !(r > 0.0)) throw domain_error("log_ball_lens_fraction: radii must be > 0");
    if (d < 0.0) throw domain_error("log_ball_lens_fraction: d < 0");
    if (d >= R + r) return kNegInf;
    if (d + r <= R) return n * std::log(r / R);  // small ball fully inside
    if (d + R <= r) return 0.0;                  // big ball fully inside
    double c1 = (d * d + R * R - r * r) / (2.0 * d);
    double cap_big = log_ball_cap_fraction(n, c1 / R);
    double cap_small = n * std::log(r / R) + log_ball_cap_fraction(n, (d - c1) / r);
    return log_sum_exp(cap_big, cap_small);
}

// Uniform sample from B(center, radius); center == nullptr means the origin.
inline void sample_in_ball(Rng& rng, std::int64_t n, double radius, const double* center,
                           double* out) {
    double norm2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        out[i] = rng.gaussian();
        norm2 += out[i] * out[i];
    }
    double u = rng.uniform_open();
    double scale = radius * std::exp(std::log(u) / static_cast<double>(n)) / std::sqrt(norm2);
    for (std::int64_t i = 0; i < n; ++i) {
        out[i] *= scale;
        if (center) out[i] += center[i];
    }
}

// ---------------------------------------------------------------------------
// Covering codebooks.

struct Verification {
    enum class Mode { exhaustive, sampled };
    Mode mode = Mode::exhaustive;
    std::uint64_t samples = 0;              // sampled mode: verification draws
    double confidence = 0.0;                // sampled mode
    std::uint64_t repairs = 0;              // uncovered points promoted to centers
    double cp_upper_bound = 0.0;            // one-sided bound on uncovered mass
};

struct CoverOptions {
    std::uint64_t codeword_budget = 1ULL << 24;
    Verification::Mode verify_mode = Verification::Mode::exhaustive;
    std::uint64_t verify_samples = 100000;
    double confidence = 0.99;
};

struct CoveringCode {
    SourceKind kind = SourceKind::discrete;
    std::uint32_t n = 0;
    double radius = 0.0;  // Hamming fraction, or squared error per symbol
    BitMatrix bits;       // binary centers
    std::vector<double> reals;  // gaussian centers, row-major n doubles each
    Verification verification;

    std::size_t count() const {
        return kind == SourceKind::discrete ? bits.rows() : reals.size() / n;
    }
    double log_size() const { return std::log(static_cast<double>(count())); }
    double euclid_radius() const { return std::sqrt(radius * static_cast<double>(n)); }
};

// Random-codeword target for covering a weight-k type class at integer
// radius t: ceil((n+1)^a exp(n R)) with R = max(0, h2(k/n) - h2(t/n)).
// The polynomial exponent trades hole probability against rate overhead.
inline double hamming_cover_log_target(std::int64_t n, std::int64_t k, std::int64_t t,
                                       double poly_exponent = 2.0) {
    if (k <= t) return 0.0;  // one center
    double R = std::max(0.0, binary_entropy(static_cast<double>(k) / n) -
                                 binary_entropy(static_cast<double>(t) / n));
    double log_raw = poly_exponent * std::log(static_cast<double>(n + 1)) + n * R;
    // never need more centers than sequences
    return std::min(log_raw, log_binomial(n, k));
}

// Covering of the binary type class T_Q with Hamming balls of fractional
// radius D. Centers are uniform draws from the reproduction type class;
// verification promotes every uncovered sequence found into a center.
inline CoveringCode cover_hamming_type_class(const TypeVector& Q, double D, std::uint64_t seed,
                                             const CoverOptions& opts = {}) {
    if (Q.counts.size() != 2) throw domain_error("cover_hamming_type_class: binary alphabet only");
    if (!(D > 0.0 && D < 0.5)) throw domain_error("cover_hamming_type_class: need 0 < D < 1/2");
    std::int64_t n = Q.n(), k = Q.counts[1];
    if (n < 1 || n > 62) throw domain_error("cover_hamming_type_class: n must be in [1, 62]");
    std::int64_t t = static_cast<std::int64_t>(std::floor(n * D + 1e-9));

    CoveringCode code;
    code.kind = SourceKind::discrete;
    code.n = static_cast<std::uint32_t>(n);
    code.radius = D;
    code.bits = BitMatrix(static_cast<std::uint32_t>(n));

    double log_target = hamming_cover_log_target(n, k, t);
    if (log_target > std::log(static_cast<double>(opts.codeword_budget)) + 1e-9)
        throw size_error("cover_hamming_type_class: target size exceeds codeword budget");
    std::uint64_t target = static_cast<std::uint64_t>(std::ceil(std::exp(log_target) - 1e-9));
    std::int64_t m = best_center_weight(n, k, t);

    Rng rng(mix_key(seed, 0x636f7665ULL, static_cast<std::uint64_t>(k)));
    std::vector<std::int32_t> pool;
    std::vector<std::uint64_t> scratch(code.bits.words_per_row, 0);
    for (std::uint64_t i = 0; i < target; ++i) {
        sample_weight_word(rng, pool, code.n, m, scratch.data(), code.bits.words_per_row);
        code.bits.append_row(scratch.data());
    }

    auto covered = [&](const std::uint64_t* y) {
        for (std::size_t c = 0; c < code.bits.rows(); ++c)
            if (hamming_distance(y, code.bits.row(c), code.bits.words_per_row) <= t) return true;
        return false;
    };

    code.verification.mode = opts.verify_mode;
    if (opts.verify_mode == Verification::Mode::exhaustive) {
        if (log_binomial(n, k) > std::log(1e8))
            throw size_error("cover_hamming_type_class: type class too large for exhaustive verify");
        for_each_weight_word(code.n, k, [&](const std::uint64_t* y) {
            if (!covered(y)) {
                code.bits.append_row(y);
                ++code.verification.repairs;
            }
        });
        code.verification.cp_upper_bound = 0.0;
    } else {
        code.verification.samples = opts.verify_samples;
        code.verification.confidence = opts.confidence;
        for (std::uint64_t s = 0; s < opts.verify_samples; ++s) {
            sample_weight_word(rng, pool, code.n, k, scratch.data(), code.bits.words_per_row);
            if (!covered(scratch.data())) {
                code.bits.append_row(scratch.data());
                ++code.verification.repairs;
            }
        }
        code.verification.cp_upper_bound =
            clopper_pearson_upper(0, static_cast<std::int64_t>(opts.verify_samples), opts.confidence);
    }
    if (code.bits.rows() > opts.codeword_budget)
        throw size_error("cover_hamming_type_class: repairs exceeded codeword budget");
    return code;
}

struct SuccessiveCovering {
    CoveringCode outer;                 // radius D1
    std::vector<CoveringCode> inner;    // one per outer center, radius D2, covering its cell
};

// Index of the first outer center within fractional radius D of y; -1 if none.
inline std::int64_t assign_outer(const CoveringCode& outer, const std::uint64_t* y) {
    std::int64_t t = static_cast<std::int64_t>(
        std::floor(outer.n * outer.radius + 1e-9));
    for (std::size_t c = 0; c < outer.bits.rows(); ++c)
        if (hamming_distance(y, outer.bits.row(c), outer.bits.words_per_row) <= t)
            return static_cast<std::int64_t>(c);
    return -1;
}

// Successive (D1, D2)-covering of T_Q: an outer covering at D1, then for each
// outer center an inner covering at D2 of exactly the sequences assigned to
// it (ties to the lowest center index). Exhaustive-verifiable n only.
inline SuccessiveCovering successive_cover(const TypeVector& Q, double D1, double D2,
                                           std::uint64_t seed, const CoverOptions& opts = {}) {
    if (!(D2 > 0.0 && D2 <= D1 && D1 < 0.5))
        throw domain_error("successive_cover: need 0 < D2 <= D1 < 1/2");
    std::int64_t n = Q.n(), k = Q.counts[1];
    CoverOptions outer_opts = opts;
    outer_opts.verify_mode = Verification::Mode::exhaustive;

    SuccessiveCovering sc;
    sc.outer = cover_hamming_type_class(Q, D1, mix_key(seed, 1), outer_opts);
    std::int64_t t2 = static_cast<std::int64_t>(std::floor(n * D2 + 1e-9));

    std::size_t centers = sc.outer.bits.rows();
    std::vector<std::vector<std::uint64_t>> cells(centers);  // flattened member rows
    std::size_t wpr = sc.outer.bits.words_per_row;
    for_each_weight_word(static_cast<std::uint32_t>(n), k, [&](const std::uint64_t* y) {
        std::int64_t c = assign_outer(sc.outer, y);
        if (c < 0) throw construction_error("successive_cover: outer covering hole");
        auto& cell = cells[static_cast<std::size_t>(c)];
        cell.insert(cell.end(), y, y + wpr);
    });

    sc.inner.reserve(centers);
    for (std::size_t c = 0; c < centers; ++c) {
        CoveringCode in;
        in.kind = SourceKind::discrete;
        in.n = sc.outer.n;
        in.radius = D2;
        in.bits = BitMatrix(sc.outer.n);
        in.bits.append_row(sc.outer.bits.row(c));  // D2 == D1 collapses to this
        std::size_t members = cells[c].size() / wpr;
        for (std::size_t i = 0; i < members; ++i) {
            const std::uint64_t* y = cells[c].data() + i * wpr;
            bool ok = false;
            for (std::size_t j = 0; j < in.bits.rows() && !ok; ++j)
                ok = hamming_distance(y, in.bits.row(j), wpr) <= t2;
            if (!ok) {
                in.bits.append_row(y);
                ++in.verification.repairs;
            }
        }
        in.verification.mode = Verification::Mode::exhaustive;
        sc.inner.push_back(std::move(in));
    }
    return sc;
}

// Euclidean covering of B(0, R_outer) by balls of radius r_inner with
// uniformly drawn centers; sampled verification with greedy repair.
inline CoveringCode cover_sphere(std::int64_t n, double R_outer, double r_inner,
                                 std::uint64_t seed, std::uint64_t verify_samples,
                                 double confidence, const CoverOptions& opts = {}) {
    if (n < 9) throw domain_error("cover_sphere: n must be >= 9");
    if (!(r_inner > 0.0 && r_inner <= R_outer))
        throw domain_error("cover_sphere: need 0 < r_inner <= R_outer");

    CoveringCode code;
    code.kind = SourceKind::gaussian;
    code.n = static_cast<std::uint32_t>(n);
    code.radius = r_inner * r_inner / static_cast<double>(n);

    if (r_inner == R_outer) {  // one ball at the origin suffices
        code.reals.assign(static_cast<std::size_t>(n), 0.0);
        code.verification.mode = Verification::Mode::sampled;
        code.verification.samples = verify_samples;
        code.verification.confidence = confidence;
        code.verification.cp_upper_bound = 0.0;
        return code;
    }

    // random-part count ceil(n^{5/2} (R/r)^n), capped by the configured budget;
    // greedy repair below keeps the verified sample fully covered either way
    double log_target = 2.5 * std::log(static_cast<double>(n)) +
                        n * std::log(R_outer / r_inner);
    std::uint64_t target = opts.codeword_budget;
    if (log_target < std::log(static_cast<double>(opts.codeword_budget)))
        target = static_cast<std::uint64_t>(std::ceil(std::exp(log_target) - 1e-9));

    Rng rng(mix_key(seed, 0x73706872ULL));
    std::vector<double> pt(static_cast<std::size_t>(n));
    code.reals.reserve(target * static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < target; ++i) {
        sample_in_ball(rng, n, R_outer, nullptr, pt.data());
        code.reals.insert(code.reals.end(), pt.begin(), pt.end());
    }

    double r2 = r_inner * r_inner;
    auto covered = [&](const double* y) {
        std::size_t cnt = code.reals.size() / n;
        for (std::size_t c = 0; c < cnt; ++c) {
            const double* ctr = code.reals.data() + c * n;
            double d2 = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                double diff = y[i] - ctr[i];
                d2 += diff * diff;
                if (d2 > r2) break;
            }
            if (d2 <= r2) return true;
        }
        return false;
    };

    code.verification.mode = Verification::Mode::sampled;
    code.verification.samples = verify_samples;
    code.verification.confidence = confidence;
    for (std::uint64_t s = 0; s < verify_samples; ++s) {
        sample_in_ball(rng, n, R_outer, nullptr, pt.data());
        if (!covered(pt.data())) {
            code.reals.insert(code.reals.end(), pt.begin(), pt.end());
            ++code.verification.repairs;
        }
    }
    code.verification.cp_upper_bound =
        clopper_pearson_upper(0, static_cast<std::int64_t>(verify_samples), confidence);
    return code;
}

enum class ThresholdMode { exact, berry_esseen };

// Shell radius r with Pr{ |X^n|^2 > r^2 } = eps for iid N(0, sigma^2).
// Exact mode inverts the chi-square tail; berry_esseen evaluates
// r^2 = n s^2 + sqrt(2n) s^2 Q^{-1}(eps - 15/(4 sqrt(2n))).
inline double gaussian_shell_radius(double variance, std::int64_t n, double eps,
                                    ThresholdMode mode) {
    if (!(variance > 0.0) || n < 1) throw domain_error("gaussian_shell_radius: bad inputs");
    if (!(eps > 0.0 && eps < 1.0)) throw domain_error("gaussian_shell_radius: eps in (0,1)");
    if (mode == ThresholdMode::exact)
        return std::sqrt(variance * chi_square_upper_quantile(static_cast<double>(n), eps));
    double correction = 15.0 / (4.0 * std::sqrt(2.0 * static_cast<double>(n)));
    if (eps <= correction)
        throw domain_error("gaussian_shell_radius: Berry-Esseen correction dominates epsilon");
    double r2 = n * variance +
                std::sqrt(2.0 * n) * variance * normal_upper_quantile(eps - correction);
    return std::sqrt(r2);
}

// Type-weight threshold q with Pr{ sum X_i > q n } <= eps for iid Bern(p).
// Exact mode: smallest k/n with the exact binomial tail <= eps; berry_esseen:
// q = p + sqrt(p(1-p)/n) Q^{-1}(eps - 1/(2 sqrt(n p (1-p)^3))).
inline double binary_type_threshold(double p, std::int64_t n, double eps, ThresholdMode mode) {
    if (!(p > 0.0 && p < 0.5)) throw domain_error("binary_type_threshold: need 0 < p < 1/2");
    if (!(eps > 0.0 && eps < 1.0)) throw domain_error("binary_type_threshold: eps in (0,1)");
    if (mode == ThresholdMode::exact) {
        std::int64_t k = binomial_upper_quantile(n, p, eps);
        return static_cast<double>(k) / static_cast<double>(n);
    }
    double correction = 1.0 / (2.0 * std::sqrt(n * p * std::pow(1.0 - p, 3)));
    if (eps <= correction)
        throw domain_error("binary_type_threshold: Berry-Esseen correction dominates epsilon");
    return p + std::sqrt(p * (1.0 - p) / n) * normal_upper_quantile(eps - correction);
}

// ---------------------------------------------------------------------------
// Codebook file format, shared with the layered module.
// "LRDC1", u8 kind, u32 n, u32 layer count, per-layer u64 size, then rows:
// binary bit-packed little-endian ceil(n/8) bytes, gaussian n f64 LE.

struct CodebookFileLayer {
    std::uint64_t count = 0;
    std::vector<std::uint8_t> packed;  // binary: count * ceil(n/8) bytes
    std::vector<double> reals;         // gaussian: count * n doubles
};

struct CodebookFile {
    SourceKind kind = SourceKind::discrete;
    std::uint32_t n = 0;
    std::vector<CodebookFileLayer> layers;
};

inline std::vector<std::uint8_t> pack_bits_bytes(const BitMatrix& bits) {
    std::size_t bytes_per_row = (bits.n + 7) / 8;
    std::vector<std::uint8_t> out(bits.rows() * bytes_per_row, 0);
    for (std::size_t r = 0; r < bits.rows(); ++r)
        for (std::size_t i = 0; i < bits.n; ++i)
            if (get_bit(bits.row(r), i)) out[r * bytes_per_row + (i >> 3)] |= 1u << (i & 7);
    return out;
}

inline BitMatrix unpack_bits_bytes(const std::vector<std::uint8_t>& bytes, std::uint32_t n,
                                   std::uint64_t count) {
    BitMatrix bits(n);
    std::size_t bytes_per_row = (n + 7) / 8;
    for (std::uint64_t r = 0; r < count; ++r) {
        std::size_t row = bits.append_zero_row();
        for (std::size_t i = 0; i < n; ++i)
            if ((bytes[r * bytes_per_row + (i >> 3)] >> (i & 7)) & 1u) set_bit(bits.row(row), i);
    }
    return bits;
}

static_assert(std::endian::native == std::endian::little,
              "codebook file writer assumes a little-endian host");

inline void write_codebook_file(const std::string& path, const CodebookFile& cb) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("write_codebook_file: cannot open " + path);
    f.write("LRDC1", 5);
    std::uint8_t kind = static_cast<std::uint8_t>(cb.kind);
    f.write(reinterpret_cast<const char*>(&kind), 1);
    f.write(reinterpret_cast<const char*>(&cb.n), 4);
    std::uint32_t layer_count = static_cast<std::uint32_t>(cb.layers.size());
    f.write(reinterpret_cast<const char*>(&layer_count), 4);
    for (const auto& l : cb.layers) f.write(reinterpret_cast<const char*>(&l.count), 8);
    for (const auto& l : cb.layers) {
        if (cb.kind == SourceKind::discrete) {
            f.write(reinterpret_cast<const char*>(l.packed.data()),
                    static_cast<std::streamsize>(l.packed.size()));
        } else {
            f.write(reinterpret_cast<const char*>(l.reals.data()),
                    static_cast<std::streamsize>(l.reals.size() * sizeof(double)));
        }
    }
    if (!f) throw io_error("write_codebook_file: write failed for " + path);
}

inline CodebookFile read_codebook_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("read_codebook_file: cannot open " + path);
    char magic[5];
    f.read(magic, 5);
    if (!f || std::memcmp(magic, "LRDC1", 5) != 0)
        throw io_error("read_codebook_file: bad magic in " + path);
    CodebookFile cb;
    std::uint8_t kind = 0;
    f.read(reinterpret_cast<char*>(&kind), 1);
    cb.kind = static_cast<SourceKind>(kind);
    f.read(reinterpret_cast<char*>(&cb.n), 4);
    std::uint32_t layer_count = 0;
    f.read(reinterpret_cast<char*>(&layer_count), 4);
    cb.layers.resize(layer_count);
    for (auto& l : cb.layers) f.read(reinterpret_cast<char*>(&l.count), 8);
    for (auto& l : cb.layers) {
        if (cb.kind == SourceKind::discrete) {
            std::size_t bytes_per_row = (cb.n + 7) / 8;
            l.packed.resize(l.count * bytes_per_row);
            f.read(reinterpret_cast<char*>(l.packed.data()),
                   static_cast<std::streamsize>(l.packed.size()));
        } else {
            l.reals.resize(l.count * cb.n);
            f.read(reinterpret_cast<char*>(l.reals.data()),
                   static_cast<std::streamsize>(l.reals.size() * sizeof(double)));
        }
    }
    if (!f) throw io_error("read_codebook_file: truncated file " + path);
    return cb;
}

}  // namespace lrd
