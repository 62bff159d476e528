#pragma once

// Two-decoder successive-refinement simulator: type/radius case partitioning,
// message splitting, and per-decoder excess-distortion measurement.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lrd/covering.hpp"
#include "lrd/errors.hpp"
#include "lrd/layered.hpp"
#include "lrd/math.hpp"
#include "lrd/ratedist.hpp"
#include "lrd/rng.hpp"
#include "lrd/types.hpp"

namespace lrd {

enum class SucrefCase : std::uint8_t { both_ok = 0, dec1_only = 1, dec2_only = 2, both_fail = 3 };

// Binary partition of the type space into the four encoding cases, with the
// exact probability mass of each case.
struct CasePartition {
    std::int64_t n = 0;
    double D1 = 0.0, D2 = 0.0, eps1 = 0.0, eps2 = 0.0;
    DeltaRResult dr1, dr2;
    std::vector<SucrefCase> by_weight;  // index k = 0..n
    std::array<double, 4> mass{};       // indexed by SucrefCase

    SucrefCase case_of(std::int64_t k) const { return by_weight.at(static_cast<std::size_t>(k)); }
    double dec1_fail_mass() const {
        return mass[static_cast<int>(SucrefCase::dec2_only)] +
               mass[static_cast<int>(SucrefCase::both_fail)];
    }
    double dec2_fail_mass() const {
        return mass[static_cast<int>(SucrefCase::dec1_only)] +
               mass[static_cast<int>(SucrefCase::both_fail)];
    }
};

// Four cases by comparing per-type rates against the Delta-R thresholds.
// Binary-Hamming is successively refinable, so R(Q, D1, D2) = R(Q, D2).
inline CasePartition partition_types(const SourceModel& source, double D1, double D2, double eps1,
                                     double eps2, std::int64_t n,
                                     std::int64_t cap = kDefaultTypeCap) {
    if (!source.is_bernoulli()) throw domain_error("partition_types: Bernoulli source required");
    double p = source.bernoulli_p();
    if (!(0.0 < D2 && D2 < D1 && D1 < p))
        throw domain_error("partition_types: need 0 < D2 < D1 < p");

    TypeRateFn rate_fn = [](const std::vector<double>& f, double D) {
        return rd_binary(f.at(1), D);
    };
    CasePartition part;
    part.n = n;
    part.D1 = D1;
    part.D2 = D2;
    part.eps1 = eps1;
    part.eps2 = eps2;
    part.dr1 = delta_r(source, D1, eps1, n, rate_fn, cap);
    part.dr2 = delta_r(source, D2, eps2, n, rate_fn, cap);

    double base1 = rd_binary(p, D1) + part.dr1.delta_r;
    double base2 = rd_binary(p, D2) + part.dr2.delta_r;
    part.by_weight.resize(static_cast<std::size_t>(n) + 1);
    for (std::int64_t k = 0; k <= n; ++k) {
        double w = static_cast<double>(k) / n;
        bool ok1 = rd_binary(w, D1) <= base1 + 1e-9;
        bool ok2 = rd_binary(w, D2) <= base2 + 1e-9;
        SucrefCase c = ok1 ? (ok2 ? SucrefCase::both_ok : SucrefCase::dec1_only)
                           : (ok2 ? SucrefCase::dec2_only : SucrefCase::both_fail);
        part.by_weight[static_cast<std::size_t>(k)] = c;
        part.mass[static_cast<int>(c)] += std::exp(log_binomial_pmf(n, k, p));
    }
    return part;
}

// Lexicographic split of a combined index over {1..M1} x {1..M2}.
inline std::pair<std::uint64_t, std::uint64_t> split_message(std::uint64_t index, std::uint64_t M1,
                                                             std::uint64_t M2) {
    if (M1 == 0 || M2 == 0) throw domain_error("split_message: message counts must be positive");
    if (index < 1 || (index - 1) / M2 >= M1) throw domain_error("split_message: index out of range");
    std::uint64_t m1 = (index - 1) / M2 + 1;
    std::uint64_t m2 = (index - 1) % M2 + 1;
    return {m1, m2};
}

inline std::uint64_t merge_message(std::uint64_t m1, std::uint64_t m2, std::uint64_t M1,
                                   std::uint64_t M2) {
    if (m1 < 1 || m1 > M1 || m2 < 1 || m2 > M2)
        throw domain_error("merge_message: message out of range");
    return (m1 - 1) * M2 + m2;
}

struct SucrefReport {
    std::int64_t n = 0;
    std::int64_t trials = 0;
    double rate1 = 0.0;  // (1/n) ln M1, type header included for binary
    double rate2 = 0.0;  // (1/n) ln M1 M2
    std::int64_t dec1_failures = 0;
    std::int64_t dec2_failures = 0;
    Interval ci1, ci2;  // exact 99% Clopper-Pearson on the failure frequencies
    double exact_dec1_fail_mass = 0.0;  // binary: from the partition; gaussian: band mass
    double exact_dec2_fail_mass = 0.0;
    double delta_r1 = 0.0, delta_r2 = 0.0;  // binary
    double r1 = 0.0, r2 = 0.0;              // gaussian shell radii
};

struct SucrefOptions {
    std::int64_t trials = 2000;
    std::uint64_t seed = 1;
    bool allow_unequal_eps_gaussian = false;  // full three-case construction
    std::int64_t type_cap = kDefaultTypeCap;
};

namespace detail {

struct BinaryBlockKernel {
    std::int64_t center_weight = 0;
    double log_cover = kNegInf;
};

// Draw a codeword covering `word` (weight k) at integer radius t from the
// uniform-over-reproduction-type sampler; true probability model, counted
// holes. Returns false on a hole.
inline bool virtual_cover_draw(Rng& rng, std::int64_t n, std::span<const std::uint64_t> word,
                               std::int64_t t, double block_log_count,
                               const BinaryBlockKernel& ker, std::vector<std::int32_t>& supp,
                               std::vector<std::int32_t>& pool_in,
                               std::vector<std::int32_t>& pool_out,
                               std::vector<std::int32_t>& comp, std::uint64_t* out,
                               std::size_t words) {
    double p = std::exp(ker.log_cover);
    double count = std::exp(block_log_count);
    double idx = sample_scan_index(rng, p, count);
    if (idx == 0.0) return false;
    supp.clear();
    for (std::int64_t b = 0; b < n; ++b)
        if (get_bit(word.data(), static_cast<std::size_t>(b)))
            supp.push_back(static_cast<std::int32_t>(b));
    sample_covering_center(rng, n, supp, ker.center_weight, t, ker.log_cover, pool_in, pool_out,
                           comp, out, words);
    return true;
}

}  // namespace detail

// Monte Carlo two-decoder simulation. Binary uses the four-case type
// construction; Gaussian uses the nested-ball scheme (equal epsilons by
// default, the full three-case split behind the option flag).
inline SucrefReport simulate_sucref(const SourceModel& source, double D1, double D2, double eps1,
                                    double eps2, std::int64_t n, const SucrefOptions& opts = {}) {
    SucrefReport rep;
    rep.n = n;
    rep.trials = opts.trials;

    if (source.kind == SourceKind::discrete) {
        if (!source.is_bernoulli()) throw domain_error("simulate_sucref: Bernoulli source required");
        double p = source.bernoulli_p();
        CasePartition part = partition_types(source, D1, D2, eps1, eps2, n, opts.type_cap);
        rep.delta_r1 = part.dr1.delta_r;
        rep.delta_r2 = part.dr2.delta_r;
        rep.exact_dec1_fail_mass = part.dec1_fail_mass();
        rep.exact_dec2_fail_mass = part.dec2_fail_mass();

        std::int64_t t1 = detail::hamming_radius(n, D1);
        std::int64_t t2 = detail::hamming_radius(n, D2);
        double log_np1 = std::log(static_cast<double>(n + 1));
        // slimmer polynomial factor than the layered module: the aggregate
        // rate budget here is tight while per-block hole mass stays ~(n+1)^1.5/sqrt(n)
        const double kPoly = 1.5;

        // decoder-1 blocks share one size, from R1(P,D1)+DeltaR1 (aggregation)
        double log_m1_block = detail::log_ceil(kPoly * log_np1 +
                                               n * (rd_binary(p, D1) + part.dr1.delta_r));
        // decoder-2 message space: residual covering for both_ok types vs the
        // split share of the direct D2 codebooks of dec2_only types
        double log_m2_inner = detail::binary_layer_log_size(n, t2 + 1, t1, t2, true, kPoly);
        double log_m2_split =
            std::max(0.0, detail::log_ceil(kPoly * log_np1 +
                                           n * (rd_binary(p, D2) + part.dr2.delta_r)) -
                              log_m1_block);
        double log_m2 = std::max(log_m2_inner, log_m2_split);
        double type_header = 2.0 * log_np1;  // |X| log(n+1) bits of type description
        rep.rate1 = (log_m1_block + type_header) / n;
        rep.rate2 = rep.rate1 + log_m2 / n;

        // per-weight cover kernels, filled lazily
        std::vector<detail::BinaryBlockKernel> ker1(static_cast<std::size_t>(n) + 1);
        std::vector<detail::BinaryBlockKernel> ker2(static_cast<std::size_t>(n) + 1);
        std::vector<bool> have1(static_cast<std::size_t>(n) + 1, false),
            have2(static_cast<std::size_t>(n) + 1, false);
        auto kernel_at = [&](std::vector<detail::BinaryBlockKernel>& ks, std::vector<bool>& have,
                             std::int64_t k, std::int64_t t) -> const detail::BinaryBlockKernel& {
            auto idx = static_cast<std::size_t>(k);
            if (!have[idx]) {
                ks[idx].center_weight = best_center_weight(n, k, t);
                ks[idx].log_cover = log_hamming_cover_prob(n, k, ks[idx].center_weight, t);
                have[idx] = true;
            }
            return ks[idx];
        };

        std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
        std::vector<std::int32_t> supp, pool_in, pool_out, comp;
        std::vector<std::uint64_t> c1(words), c2(words), residual(words);

        for (std::int64_t trial = 0; trial < opts.trials; ++trial) {
            Rng rng(mix_key(opts.seed, 0x5ac3ef01ULL, static_cast<std::uint64_t>(trial)));
            std::vector<std::uint64_t> x = sample_bernoulli_word(rng, n, p);
            std::int64_t k = word_weight(x.data(), words);
            SucrefCase c = part.case_of(k);
            bool dec1_ok = false, dec2_ok = false;

            if (c == SucrefCase::both_ok || c == SucrefCase::dec1_only) {
                if (detail::virtual_cover_draw(rng, n, x, t1, log_m1_block,
                                               kernel_at(ker1, have1, k, t1), supp, pool_in,
                                               pool_out, comp, c1.data(), words)) {
                    dec1_ok = true;
                    if (c == SucrefCase::both_ok) {
                        for (std::size_t w = 0; w < words; ++w) residual[w] = x[w] ^ c1[w];
                        std::int64_t wu = word_weight(residual.data(), words);
                        if (wu <= t2) {
                            dec2_ok = true;  // zero refinement codeword
                        } else {
                            double log_cnt = detail::log_ceil(hamming_cover_log_target(n, wu, t2, kPoly));
                            if (detail::virtual_cover_draw(rng, n, residual, t2, log_cnt,
                                                           kernel_at(ker2, have2, wu, t2), supp,
                                                           pool_in, pool_out, comp, c2.data(),
                                                           words)) {
                                dec2_ok = true;
                            }
                        }
                    }
                }
            } else if (c == SucrefCase::dec2_only) {
                // direct D2 covering of T_Q, reindexed through split_message
                double log_cnt = detail::log_ceil(kPoly * log_np1 + n * rd_binary(p, D2) +
                                                  n * part.dr2.delta_r);
                if (detail::virtual_cover_draw(rng, n, x, t2, log_cnt,
                                               kernel_at(ker2, have2, k, t2), supp, pool_in,
                                               pool_out, comp, c2.data(), words)) {
                    dec2_ok = true;
                }
            }
            if (!dec1_ok) ++rep.dec1_failures;
            if (!dec2_ok) ++rep.dec2_failures;
        }
    } else {
        // gaussian
        double var = source.variance;
        if (!(0.0 < D2 && D2 < D1 && D1 < var))
            throw domain_error("simulate_sucref: need 0 < D2 < D1 < variance");
        bool equal_eps = std::fabs(eps1 - eps2) < 1e-15;
        if (!equal_eps && !opts.allow_unequal_eps_gaussian)
            throw domain_error(
                "simulate_sucref: unequal-epsilon Gaussian runs need the explicit option flag");
        rep.r1 = gaussian_shell_radius(var, n, eps1, ThresholdMode::exact);
        rep.r2 = gaussian_shell_radius(var, n, eps2, ThresholdMode::exact);
        double rD1 = std::sqrt(n * D1), rD2 = std::sqrt(n * D2);
        double log_n52 = 2.5 * std::log(static_cast<double>(n));

        double log_m1, log_m2;
        double r_both;  // both decoders succeed within this radius
        if (equal_eps) {
            r_both = rep.r1;
            log_m1 = detail::log_ceil(log_n52 + n * std::log(rep.r1 / rD1));
            log_m2 = detail::log_ceil(log_n52 + n * std::log(rD1 / rD2));
            rep.exact_dec1_fail_mass = eps1;
            rep.exact_dec2_fail_mass = eps2;
        } else if (eps1 < eps2) {
            // r1 > r2: both in B(0,r2); decoder 1 alone in the (r2, r1] band
            r_both = rep.r2;
            double log_m1_00 = detail::log_ceil(log_n52 + n * std::log(rep.r2 / rD1));
            double log_m1_01 = detail::log_ceil(log_n52 + n * std::log(rep.r1 / rD1));
            log_m1 = log_sum_exp(log_m1_00, log_m1_01);
            log_m2 = detail::log_ceil(log_n52 + n * std::log(rD1 / rD2));
            rep.exact_dec1_fail_mass = eps1;
            rep.exact_dec2_fail_mass = eps2;
        } else {
            // r1 <= r2: both in B(0,r1); decoder 2 alone in the (r1, r2] band
            r_both = rep.r1;
            double log_m1_10 = detail::log_ceil(log_n52 + n * std::log(rep.r1 / rD1));
            double log_m1_11 = detail::log_ceil(log_n52 + n * std::log(rep.r2 / rD1));
            double log_mtilde = detail::log_ceil(log_n52 + n * std::log(rep.r2 / rD2));
            log_m1 = log_sum_exp(log_m1_10, log_m1_11);
            double log_m2_10 = detail::log_ceil(log_n52 + n * std::log(rD1 / rD2));
            double log_m2_11 = std::max(0.0, log_mtilde - log_m1_11);
            log_m2 = std::max(log_m2_10, log_m2_11);
            rep.exact_dec1_fail_mass = eps1;
            rep.exact_dec2_fail_mass = eps2;
        }
        rep.rate1 = log_m1 / n;
        rep.rate2 = (log_m1 + log_m2) / n;

        std::vector<double> c(static_cast<std::size_t>(n));
        for (std::int64_t trial = 0; trial < opts.trials; ++trial) {
            Rng rng(mix_key(opts.seed, 0x5ac3ef02ULL, static_cast<std::uint64_t>(trial)));
            std::vector<double> x = sample_gaussian_word(rng, n, var);
            double norm2 = 0.0;
            for (double v : x) norm2 += v * v;
            double norm = std::sqrt(norm2);
            bool dec1_ok = false, dec2_ok = false;

            // first-found outcome over an implicit ball covering of size
            // exp(log_count): hole draw, then a uniform draw from the lens
            auto draw_in_lens = [&](const std::vector<double>& y, double outer, double radius,
                                    double log_count) {
                double d2 = 0.0;
                for (double v : y) d2 += v * v;
                double log_p = log_ball_lens_fraction(n, std::sqrt(d2), outer, radius);
                if (detail::sample_scan_index(rng, std::exp(log_p), std::exp(log_count)) == 0.0)
                    return false;
                double log_accept = log_p + n * std::log(outer / radius);
                std::int64_t budget = std::max<std::int64_t>(
                    1000, static_cast<std::int64_t>(50.0 / std::exp(log_accept)));
                budget = std::min<std::int64_t>(budget, 100000000);
                for (std::int64_t tries = 0; tries < budget; ++tries) {
                    sample_in_ball(rng, n, radius, y.data(), c.data());
                    double s = 0.0;
                    for (double v : c) s += v * v;
                    if (s <= outer * outer) return true;
                }
                throw construction_error("simulate_sucref: lens rejection sampling exhausted");
            };

            if (norm <= r_both) {
                double outer1 = equal_eps ? rep.r1 : std::min(rep.r1, rep.r2);
                if (draw_in_lens(x, outer1, rD1, log_m1)) {
                    dec1_ok = true;
                    std::vector<double> residual(x);
                    for (std::int64_t j = 0; j < n; ++j)
                        residual[static_cast<std::size_t>(j)] -= c[static_cast<std::size_t>(j)];
                    if (draw_in_lens(residual, rD1, rD2, log_m2)) dec2_ok = true;
                }
            } else if (!equal_eps && eps1 < eps2 && norm <= rep.r1) {
                dec1_ok = draw_in_lens(x, rep.r1, rD1, log_m1);
            } else if (!equal_eps && eps1 >= eps2 && norm <= rep.r2) {
                dec2_ok = draw_in_lens(x, rep.r2, rD2, log_sum_exp(log_m1, log_m2));
            }
            if (!dec1_ok) ++rep.dec1_failures;
            if (!dec2_ok) ++rep.dec2_failures;
        }
    }

    rep.ci1 = clopper_pearson(rep.dec1_failures, rep.trials, 0.99);
    rep.ci2 = clopper_pearson(rep.dec2_failures, rep.trials, 0.99);
    return rep;
}

}  // namespace lrd
