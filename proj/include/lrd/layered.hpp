#pragma once

// Layered encoder/decoder: distortion-ladder scheduling, per-layer covering
// sub-codebooks, greedy successive encoding, prefix (rateless) decoding, and
// complexity accounting.
//
// Codebooks come in two representations with identical per-trial semantics:
//  - materialized: explicit codeword lists (verified, repairable), scanned
//    first-found in index order;
//  - virtual: sub-codebooks of i.i.d. codewords defined by their sampling
//    distribution, where the first-found scan outcome is drawn from its exact
//    distribution (examined count ~ truncated geometric on the exact cover
//    probability, chosen codeword ~ the sampler conditioned on covering).
// The virtual path is what makes desk-scale experiments at rates near the
// finite-n bound possible; covering holes surface as declared errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrd/covering.hpp"
#include "lrd/errors.hpp"
#include "lrd/math.hpp"
#include "lrd/ratedist.hpp"
#include "lrd/rng.hpp"

namespace lrd {

struct LayerSchedule {
    SourceModel source;
    std::int64_t n = 0;
    int L = 1;
    std::vector<double> distortions;      // D_1 > ... > D_L, D_L = target
    double epsilon = 0.1;
    std::vector<double> layer_log_sizes;  // ln M_i of the construction
};

namespace detail {

// p in [0, 1/2] with h2(p) = y (nats), y in [0, ln 2].
inline double h2_inv_lower(double y) {
    y = std::clamp(y, 0.0, std::log(2.0));
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        if (binary_entropy(mid) < y) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double log_ceil(double log_value) {
    if (log_value >= 50.0) return log_value;  // ceil is a no-op at this scale
    return std::log(std::ceil(std::exp(log_value) - 1e-12));
}

inline std::int64_t hamming_radius(std::int64_t n, double D) {
    return static_cast<std::int64_t>(std::floor(n * D + 1e-9));
}

// ln of [zero_word] + sum over weights k in [k_lo, k_hi] of the per-type
// covering size at integer radius t.
inline double binary_layer_log_size(std::int64_t n, std::int64_t k_lo, std::int64_t k_hi,
                                    std::int64_t t, bool zero_word,
                                    double poly_exponent = 2.0) {
    std::vector<double> terms;
    if (zero_word) terms.push_back(0.0);
    for (std::int64_t k = k_lo; k <= k_hi; ++k)
        terms.push_back(log_ceil(hamming_cover_log_target(n, k, t, poly_exponent)));
    if (terms.empty()) return kNegInf;
    return log_sum_exp(terms);
}

}  // namespace detail

// Equal per-layer codebook sizes: bisection on the common per-layer log-size
// so that applying the layer equations sequentially lands D_L at the target.
inline LayerSchedule schedule_equal_rate(const SourceModel& source, double D, int L,
                                         std::int64_t n, double epsilon) {
    if (L < 1) throw domain_error("schedule_equal_rate: L must be >= 1");
    if (n < 1) throw domain_error("schedule_equal_rate: n must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("schedule_equal_rate: eps in (0,1)");

    LayerSchedule sched;
    sched.source = source;
    sched.n = n;
    sched.L = L;
    sched.epsilon = epsilon;

    if (source.kind == SourceKind::discrete) {
        if (!source.is_bernoulli())
            throw domain_error("schedule_equal_rate: discrete schedules support Bernoulli only");
        double p = source.bernoulli_p();
        if (p > 0.5) p = 1.0 - p;
        if (rd_binary(p, D) <= 0.0)
            throw domain_error("schedule_equal_rate: target D at or above zero-rate distortion");
        std::int64_t k_shell = binomial_upper_quantile(n, p, epsilon);
        double q = static_cast<double>(k_shell) / n;
        double o = 3.0 * std::log(static_cast<double>(n + 1)) / n;

        auto ladder_for = [&](double rho) {
            std::vector<double> ds(L);
            double y = binary_entropy(q) + o - rho;
            ds[0] = detail::h2_inv_lower(y);
            for (int i = 1; i < L; ++i) {
                y = binary_entropy(ds[i - 1]) + o - rho;
                ds[i] = detail::h2_inv_lower(y);
            }
            return ds;
        };

        if (L == 1) {
            sched.distortions = {D};
        } else {
            double lo = o + 1e-12;
            double hi = (binary_entropy(q) - binary_entropy(D)) / L + o + 1.0;
            while (ladder_for(hi).back() > D) hi *= 2.0;
            for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
                double mid = 0.5 * (lo + hi);
                if (ladder_for(mid).back() > D) lo = mid; else hi = mid;
            }
            sched.distortions = ladder_for(0.5 * (lo + hi));
            if (std::fabs(sched.distortions.back() - D) > 1e-9)
                throw domain_error("schedule_equal_rate: ladder failed to land on target D");
            sched.distortions.back() = D;
            for (int i = 1; i < L; ++i)
                if (!(sched.distortions[i] < sched.distortions[i - 1]))
                    throw domain_error("schedule_equal_rate: ladder not strictly decreasing");
        }

        sched.layer_log_sizes.resize(L);
        std::int64_t t_prev = k_shell;
        for (int i = 0; i < L; ++i) {
            std::int64_t t = detail::hamming_radius(n, sched.distortions[i]);
            sched.layer_log_sizes[i] =
                i == 0 ? detail::binary_layer_log_size(n, 0, k_shell, t, false)
                       : detail::binary_layer_log_size(n, t + 1, t_prev, t, true);
            t_prev = t;
        }
        return sched;
    }

    // gaussian
    double var = source.variance;
    if (rd_gaussian(var, D) <= 0.0)
        throw domain_error("schedule_equal_rate: target D at or above the source variance");
    double r = gaussian_shell_radius(var, n, epsilon, ThresholdMode::exact);
    double o = 2.5 * std::log(static_cast<double>(n)) / n;

    auto ladder_for = [&](double rho) {
        std::vector<double> ds(L);
        double step = std::exp(-2.0 * (rho - o));
        ds[0] = (r * r / static_cast<double>(n)) * step;
        for (int i = 1; i < L; ++i) ds[i] = ds[i - 1] * step;
        return ds;
    };

    if (L == 1) {
        sched.distortions = {D};
    } else {
        double lo = o + 1e-12;
        double hi = 0.5 * std::log(r * r / (n * D)) / L + o + 1.0;
        while (ladder_for(hi).back() > D) hi *= 2.0;
        for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
            double mid = 0.5 * (lo + hi);
            if (ladder_for(mid).back() > D) lo = mid; else hi = mid;
        }
        sched.distortions = ladder_for(0.5 * (lo + hi));
        if (std::fabs(sched.distortions.back() - D) > 1e-9)
            throw domain_error("schedule_equal_rate: ladder failed to land on target D");
        sched.distortions.back() = D;
    }

    sched.layer_log_sizes.resize(L);
    double outer = r;
    for (int i = 0; i < L; ++i) {
        double cover = std::sqrt(n * sched.distortions[i]);
        sched.layer_log_sizes[i] =
            detail::log_ceil(2.5 * std::log(static_cast<double>(n)) + n * std::log(outer / cover));
        outer = cover;
    }
    return sched;
}

// ---------------------------------------------------------------------------
// Codebook representation.

struct BinaryBlock {
    std::int64_t weight = 0;         // residual weight this block serves
    std::int64_t center_weight = 0;  // sampling type of its codewords
    double log_count = 0.0;
    double count = 1.0;
    double log_cover = 0.0;          // ln Pr{one codeword covers a weight-`weight` word}
    double offset = 0.0;             // first index of the block within the layer
};

struct BinaryLayerPlan {
    std::int64_t radius = 0;  // integer Hamming radius t_i
    bool has_zero_codeword = false;
    std::int64_t min_weight = 0;  // weight of blocks.front()
    std::vector<BinaryBlock> blocks;
    double count = 0.0;
    double log_count = 0.0;

    const BinaryBlock* block_for_weight(std::int64_t w) const {
        std::int64_t idx = w - min_weight;
        if (idx < 0 || idx >= static_cast<std::int64_t>(blocks.size())) return nullptr;
        return &blocks[static_cast<std::size_t>(idx)];
    }
};

struct GaussLayerPlan {
    double outer_radius = 0.0;  // ball being covered
    double cover_radius = 0.0;  // covering ball radius
    double count = 0.0;
    double log_count = 0.0;
};

struct MaterializedLayer {
    BitMatrix bits;                         // binary rows; row 0 = zero codeword when present
    std::vector<double> reals;              // gaussian rows
    std::vector<std::size_t> block_begin;   // binary: per-plan-block row ranges
    std::vector<std::size_t> block_end;
};

struct LayeredCodebook {
    LayerSchedule schedule;
    std::uint64_t seed = 0;
    bool materialized = false;
    double first_layer_shell = 0.0;   // radius r (gaussian) or fraction q (binary)
    std::int64_t shell_count = 0;     // binary: integer weight threshold
    std::vector<BinaryLayerPlan> bplan;
    std::vector<GaussLayerPlan> gplan;
    std::vector<MaterializedLayer> mat;

    bool is_binary() const { return schedule.source.kind == SourceKind::discrete; }
    std::size_t words_per_row() const { return (static_cast<std::size_t>(schedule.n) + 63) / 64; }
};

struct BuildOptions {
    std::uint64_t materialize_budget = 1ULL << 20;  // total codewords across layers
    std::uint64_t exhaustive_enumeration_cap = 1ULL << 26;
    std::uint64_t verify_samples = 20000;
    double confidence = 0.99;
};

namespace detail {

inline BinaryLayerPlan make_binary_layer_plan(std::int64_t n, std::int64_t k_lo, std::int64_t k_hi,
                                              std::int64_t t, bool zero_word) {
    BinaryLayerPlan plan;
    plan.radius = t;
    plan.has_zero_codeword = zero_word;
    plan.min_weight = k_lo;
    double offset = zero_word ? 1.0 : 0.0;
    long double total = offset;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        BinaryBlock b;
        b.weight = k;
        b.center_weight = best_center_weight(n, k, t);
        b.log_count = log_ceil(hamming_cover_log_target(n, k, t));
        b.count = std::exp(b.log_count);
        b.log_cover = log_hamming_cover_prob(n, k, b.center_weight, t);
        b.offset = offset;
        offset += b.count;
        total += static_cast<long double>(b.count);
        plan.blocks.push_back(b);
    }
    plan.count = static_cast<double>(total);
    plan.log_count = std::log(plan.count);
    return plan;
}

}  // namespace detail

// Build the layered codebook for a schedule. Falls back to the virtual
// representation whenever the materialized total would exceed the budget.
inline LayeredCodebook build_layered(const LayerSchedule& schedule, std::uint64_t seed,
                                     const BuildOptions& opts = {}) {
    LayeredCodebook cb;
    cb.schedule = schedule;
    cb.seed = seed;
    std::int64_t n = schedule.n;
    int L = schedule.L;

    if (cb.is_binary()) {
        double p = schedule.source.bernoulli_p();
        cb.shell_count = binomial_upper_quantile(n, p, schedule.epsilon);
        cb.first_layer_shell = static_cast<double>(cb.shell_count) / n;
        std::int64_t t_prev = cb.shell_count;
        double total = 0.0;
        for (int i = 0; i < L; ++i) {
            std::int64_t t = detail::hamming_radius(n, schedule.distortions[i]);
            cb.bplan.push_back(i == 0
                                   ? detail::make_binary_layer_plan(n, 0, cb.shell_count, t, false)
                                   : detail::make_binary_layer_plan(n, t + 1, t_prev, t, true));
            total += cb.bplan.back().count;
            t_prev = t;
        }
        cb.materialized = total <= static_cast<double>(opts.materialize_budget);
        if (cb.materialized) {
            Rng rng(mix_key(seed, 0xb11d0001ULL));
            std::vector<std::int32_t> pool;
            for (int i = 0; i < L; ++i) {
                auto& plan = cb.bplan[i];
                MaterializedLayer ml;
                ml.bits = BitMatrix(static_cast<std::uint32_t>(n));
                if (plan.has_zero_codeword) ml.bits.append_zero_row();
                std::vector<std::uint64_t> scratch(ml.bits.words_per_row, 0);
                double offset = plan.has_zero_codeword ? 1.0 : 0.0;
                for (auto& block : plan.blocks) {
                    std::size_t begin = ml.bits.rows();
                    auto draws = static_cast<std::uint64_t>(block.count);
                    for (std::uint64_t c = 0; c < draws; ++c) {
                        sample_weight_word(rng, pool, static_cast<std::uint32_t>(n),
                                           block.center_weight, scratch.data(),
                                           ml.bits.words_per_row);
                        ml.bits.append_row(scratch.data());
                    }
                    // exhaustive repair keeps every weight-k word covered at radius t
                    if (log_binomial(n, block.weight) <=
                        std::log(static_cast<double>(opts.exhaustive_enumeration_cap))) {
                        for_each_weight_word(static_cast<std::uint32_t>(n), block.weight,
                                             [&](const std::uint64_t* y) {
                                                 for (std::size_t c = begin; c < ml.bits.rows(); ++c)
                                                     if (hamming_distance(y, ml.bits.row(c),
                                                                          ml.bits.words_per_row) <=
                                                         plan.radius)
                                                         return;
                                                 ml.bits.append_row(y);
                                             });
                    }
                    std::size_t end = ml.bits.rows();
                    ml.block_begin.push_back(begin);
                    ml.block_end.push_back(end);
                    block.count = static_cast<double>(end - begin);
                    block.log_count = std::log(block.count);
                    block.offset = offset;
                    offset += block.count;
                }
                plan.count = offset;
                plan.log_count = std::log(plan.count);
                cb.schedule.layer_log_sizes[i] = plan.log_count;
                cb.mat.push_back(std::move(ml));
            }
        }
        return cb;
    }

    // gaussian
    double var = schedule.source.variance;
    cb.first_layer_shell =
        gaussian_shell_radius(var, n, schedule.epsilon, ThresholdMode::exact);
    double outer = cb.first_layer_shell;
    double total = 0.0;
    for (int i = 0; i < L; ++i) {
        GaussLayerPlan plan;
        plan.outer_radius = outer;
        plan.cover_radius = std::sqrt(n * schedule.distortions[i]);
        plan.log_count = detail::log_ceil(2.5 * std::log(static_cast<double>(n)) +
                                          n * std::log(plan.outer_radius / plan.cover_radius));
        plan.count = std::exp(plan.log_count);
        total += plan.count;
        cb.gplan.push_back(plan);
        outer = plan.cover_radius;
    }
    cb.materialized = total <= static_cast<double>(opts.materialize_budget);
    if (cb.materialized) {
        Rng rng(mix_key(seed, 0xb11d0002ULL));
        std::vector<double> pt(static_cast<std::size_t>(n));
        for (int i = 0; i < L; ++i) {
            auto& plan = cb.gplan[i];
            MaterializedLayer ml;
            auto draws = static_cast<std::uint64_t>(plan.count);
            ml.reals.reserve(draws * static_cast<std::size_t>(n));
            for (std::uint64_t c = 0; c < draws; ++c) {
                sample_in_ball(rng, n, plan.outer_radius, nullptr, pt.data());
                ml.reals.insert(ml.reals.end(), pt.begin(), pt.end());
            }
            // sampled repair: exhaustive verification is impossible in R^n
            double r2 = plan.cover_radius * plan.cover_radius;
            for (std::uint64_t s = 0; s < opts.verify_samples; ++s) {
                sample_in_ball(rng, n, plan.outer_radius, nullptr, pt.data());
                bool ok = false;
                std::size_t cnt = ml.reals.size() / n;
                for (std::size_t c = 0; c < cnt && !ok; ++c) {
                    const double* ctr = ml.reals.data() + c * n;
                    double d2 = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) {
                        double diff = pt[static_cast<std::size_t>(j)] - ctr[j];
                        d2 += diff * diff;
                        if (d2 > r2) break;
                    }
                    ok = d2 <= r2;
                }
                if (!ok) ml.reals.insert(ml.reals.end(), pt.begin(), pt.end());
            }
            plan.count = static_cast<double>(ml.reals.size() / n);
            plan.log_count = std::log(plan.count);
            cb.schedule.layer_log_sizes[i] = plan.log_count;
            cb.mat.push_back(std::move(ml));
        }
    }
    return cb;
}

// ---------------------------------------------------------------------------
// Encoding.

struct EncodeResult {
    bool error = false;
    int failed_layer = -1;
    std::vector<double> indices;             // layer-local chosen index, 0-based
    std::vector<double> examined;            // codewords examined per layer
    std::vector<double> per_layer_residual;  // block distortion after each layer
    std::vector<std::vector<std::uint64_t>> chosen_bits;
    std::vector<std::vector<double>> chosen_reals;
};

namespace detail {

// Geometric first-success index given success probability p, conditioned on
// landing within `count` draws. Returns 0 on the hole event.
inline double sample_scan_index(Rng& rng, double p, double count) {
    if (p >= 1.0) return 1.0;
    if (!(p > 0.0)) return 0.0;
    double l1p = std::log1p(-p);
    double hole = std::exp(count * l1p);
    if (rng.uniform01() < hole) return 0.0;
    double u = rng.uniform_open();
    double k = std::ceil(std::log1p(-u * (1.0 - hole)) / l1p);
    return std::clamp(k, 1.0, count);
}

// Uniform draw from {c in T_m : d_H(y, c) <= t}: sample the overlap with
// supp(y) from the conditioned hypergeometric, then place the ones.
inline void sample_covering_center(Rng& rng, std::int64_t n, std::span<const std::int32_t> supp,
                                   std::int64_t m, std::int64_t t, double log_cover,
                                   std::vector<std::int32_t>& pool_in,
                                   std::vector<std::int32_t>& pool_out,
                                   std::vector<std::int32_t>& comp, std::uint64_t* out,
                                   std::size_t words) {
    std::int64_t k = static_cast<std::int64_t>(supp.size());
    std::int64_t a_min = std::max<std::int64_t>((k + m - t + 1) / 2, std::max<std::int64_t>(0, m - (n - k)));
    std::int64_t a_max = std::min(k, m);
    double u = rng.uniform01();
    long double acc = 0.0L;
    std::int64_t a = a_max;
    for (std::int64_t cand = a_min; cand <= a_max; ++cand) {
        acc += std::exp(static_cast<long double>(log_hypergeometric_pmf(n, k, m, cand) - log_cover));
        if (static_cast<double>(acc) >= u) { a = cand; break; }
    }
    std::fill(out, out + words, 0ULL);
    // a of the center's ones fall on supp(y)
    rng.sample_prefix(pool_in, static_cast<std::size_t>(k), static_cast<std::size_t>(a));
    for (std::int64_t i = 0; i < a; ++i)
        set_bit(out, static_cast<std::size_t>(supp[static_cast<std::size_t>(pool_in[i])]));
    // remaining m-a ones land off-support
    comp.clear();
    std::size_t si = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (si < supp.size() && supp[si] == i) { ++si; continue; }
        comp.push_back(static_cast<std::int32_t>(i));
    }
    std::int64_t rest = m - a;
    rng.sample_prefix(pool_out, comp.size(), static_cast<std::size_t>(rest));
    for (std::int64_t i = 0; i < rest; ++i)
        set_bit(out, static_cast<std::size_t>(comp[static_cast<std::size_t>(pool_out[i])]));
}

}  // namespace detail

// Greedy first-found layered encoding of a packed binary block.
inline EncodeResult encode_layered(std::span<const std::uint64_t> x_words,
                                   const LayeredCodebook& cb) {
    if (!cb.is_binary()) throw domain_error("encode_layered: binary codebook expected");
    std::int64_t n = cb.schedule.n;
    std::size_t words = cb.words_per_row();
    if (x_words.size() != words) throw domain_error("encode_layered: block length mismatch");

    EncodeResult res;
    Rng rng(mix_key(cb.seed, 0xe2c0de01ULL, hash_words(x_words)));
    std::vector<std::uint64_t> residual(x_words.begin(), x_words.end());
    std::vector<std::uint64_t> chosen(words, 0);
    std::vector<std::int32_t> supp, pool_in, pool_out, comp, pool;

    for (int i = 0; i < cb.schedule.L; ++i) {
        const auto& plan = cb.bplan[static_cast<std::size_t>(i)];
        std::int64_t w = word_weight(residual.data(), words);
        if (i == 0 && w > cb.shell_count) {
            res.error = true;
            res.failed_layer = 0;
            res.indices.clear();
            return res;
        }
        std::fill(chosen.begin(), chosen.end(), 0ULL);
        double index = 0.0, looked = 1.0;
        if (plan.has_zero_codeword && w <= plan.radius) {
            // zero codeword, index 0, residual unchanged
        } else {
            const BinaryBlock* block = plan.block_for_weight(w);
            if (block == nullptr)
                throw construction_error("encode_layered: residual weight outside layer plan");
            if (cb.materialized) {
                const auto& ml = cb.mat[static_cast<std::size_t>(i)];
                std::size_t bi = static_cast<std::size_t>(w - plan.min_weight);
                std::size_t begin = ml.block_begin[bi], end = ml.block_end[bi];
                bool found = false;
                for (std::size_t c = begin; c < end; ++c) {
                    if (hamming_distance(residual.data(), ml.bits.row(c), words) <= plan.radius) {
                        std::copy_n(ml.bits.row(c), words, chosen.begin());
                        index = static_cast<double>(c);
                        looked = static_cast<double>(c - begin + 1);
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    res.error = true;
                    res.failed_layer = i;
                    return res;
                }
            } else {
                double p = std::exp(block->log_cover);
                double k = detail::sample_scan_index(rng, p, block->count);
                if (k == 0.0) {  // covering hole; counted into the empirical epsilon
                    res.error = true;
                    res.failed_layer = i;
                    return res;
                }
                supp.clear();
                for (std::int64_t b = 0; b < n; ++b)
                    if (get_bit(residual.data(), static_cast<std::size_t>(b)))
                        supp.push_back(static_cast<std::int32_t>(b));
                detail::sample_covering_center(rng, n, supp, block->center_weight, plan.radius,
                                               block->log_cover, pool_in, pool_out, comp,
                                               chosen.data(), words);
                index = block->offset + (k - 1.0);
                looked = k;
            }
        }
        for (std::size_t wd = 0; wd < words; ++wd) residual[wd] ^= chosen[wd];
        res.indices.push_back(index);
        res.examined.push_back(looked);
        res.per_layer_residual.push_back(static_cast<double>(word_weight(residual.data(), words)) /
                                         static_cast<double>(n));
        res.chosen_bits.push_back(chosen);
    }
    return res;
}

// Greedy first-found layered encoding of a real-valued block.
inline EncodeResult encode_layered(std::span<const double> x, const LayeredCodebook& cb) {
    if (cb.is_binary()) throw domain_error("encode_layered: gaussian codebook expected");
    std::int64_t n = cb.schedule.n;
    if (static_cast<std::int64_t>(x.size()) != n)
        throw domain_error("encode_layered: block length mismatch");

    EncodeResult res;
    Rng rng(mix_key(cb.seed, 0xe2c0de02ULL, hash_doubles(x)));
    std::vector<double> residual(x.begin(), x.end());
    std::vector<double> chosen(static_cast<std::size_t>(n), 0.0);

    auto norm = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double t : v) s += t * t;
        return std::sqrt(s);
    };

    for (int i = 0; i < cb.schedule.L; ++i) {
        const auto& plan = cb.gplan[static_cast<std::size_t>(i)];
        double d = norm(residual);
        if (i == 0 && d > cb.first_layer_shell) {
            res.error = true;
            res.failed_layer = 0;
            res.indices.clear();
            return res;
        }
        double r = plan.cover_radius;
        double index = 0.0, looked = 1.0;
        if (cb.materialized) {
            const auto& ml = cb.mat[static_cast<std::size_t>(i)];
            std::size_t cnt = ml.reals.size() / static_cast<std::size_t>(n);
            double r2 = r * r;
            bool found = false;
            for (std::size_t c = 0; c < cnt; ++c) {
                const double* ctr = ml.reals.data() + c * static_cast<std::size_t>(n);
                double d2 = 0.0;
                for (std::int64_t j = 0; j < n; ++j) {
                    double diff = residual[static_cast<std::size_t>(j)] - ctr[j];
                    d2 += diff * diff;
                    if (d2 > r2) break;
                }
                if (d2 <= r2) {
                    std::copy_n(ctr, n, chosen.begin());
                    index = static_cast<double>(c);
                    looked = static_cast<double>(c + 1);
                    found = true;
                    break;
                }
            }
            if (!found) {
                res.error = true;
                res.failed_layer = i;
                return res;
            }
        } else {
            double log_p = log_ball_lens_fraction(n, d, plan.outer_radius, r);
            double k = detail::sample_scan_index(rng, std::exp(log_p), plan.count);
            if (k == 0.0) {
                res.error = true;
                res.failed_layer = i;
                return res;
            }
            // uniform on the lens by rejection from B(residual, r)
            double log_accept = log_p + n * std::log(plan.outer_radius / r);
            std::int64_t budget =
                std::max<std::int64_t>(1000, static_cast<std::int64_t>(50.0 / std::exp(log_accept)));
            budget = std::min<std::int64_t>(budget, 100000000);
            bool ok = false;
            for (std::int64_t tries = 0; tries < budget && !ok; ++tries) {
                sample_in_ball(rng, n, r, residual.data(), chosen.data());
                double s = 0.0;
                for (double v : chosen) s += v * v;
                ok = s <= plan.outer_radius * plan.outer_radius;
            }
            if (!ok)
                throw construction_error("encode_layered: lens rejection sampling exhausted");
            index = k - 1.0;
            looked = k;
        }
        for (std::int64_t j = 0; j < n; ++j) residual[static_cast<std::size_t>(j)] -= chosen[static_cast<std::size_t>(j)];
        double d2 = 0.0;
        for (double v : residual) d2 += v * v;
        res.indices.push_back(index);
        res.examined.push_back(looked);
        res.per_layer_residual.push_back(d2 / static_cast<double>(n));
        res.chosen_reals.push_back(chosen);
    }
    return res;
}

// Prefix reconstruction from the encode record (works for both paths).
inline std::vector<std::uint64_t> decode_prefix_binary(const EncodeResult& enc,
                                                       const LayeredCodebook& cb, int k) {
    if (k < 1 || k > static_cast<int>(enc.chosen_bits.size()))
        throw domain_error("decode_prefix_binary: prefix length out of range");
    std::vector<std::uint64_t> out(cb.words_per_row(), 0);
    for (int i = 0; i < k; ++i)
        for (std::size_t w = 0; w < out.size(); ++w) out[w] ^= enc.chosen_bits[static_cast<std::size_t>(i)][w];
    return out;
}

inline std::vector<double> decode_prefix_gaussian(const EncodeResult& enc,
                                                  const LayeredCodebook& cb, int k) {
    if (k < 1 || k > static_cast<int>(enc.chosen_reals.size()))
        throw domain_error("decode_prefix_gaussian: prefix length out of range");
    std::vector<double> out(static_cast<std::size_t>(cb.schedule.n), 0.0);
    for (int i = 0; i < k; ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += enc.chosen_reals[static_cast<std::size_t>(i)][j];
    return out;
}

// Index-based decode per the wire contract; requires a materialized codebook
// (virtual indices are not invertible without replaying the scan).
inline std::vector<std::uint64_t> decode_layered_binary(std::span<const double> indices,
                                                        const LayeredCodebook& cb, int k) {
    if (!cb.materialized)
        throw domain_error("decode_layered: virtual codebook requires the encode record");
    if (k < 1 || k > static_cast<int>(indices.size()))
        throw domain_error("decode_layered: prefix length out of range");
    std::vector<std::uint64_t> out(cb.words_per_row(), 0);
    for (int i = 0; i < k; ++i) {
        const auto& ml = cb.mat[static_cast<std::size_t>(i)];
        auto row = static_cast<std::size_t>(indices[static_cast<std::size_t>(i)]);
        if (row >= ml.bits.rows()) throw domain_error("decode_layered: index out of range");
        for (std::size_t w = 0; w < out.size(); ++w) out[w] ^= ml.bits.row(row)[w];
    }
    return out;
}

inline std::vector<double> decode_layered_gaussian(std::span<const double> indices,
                                                   const LayeredCodebook& cb, int k) {
    if (!cb.materialized)
        throw domain_error("decode_layered: virtual codebook requires the encode record");
    if (k < 1 || k > static_cast<int>(indices.size()))
        throw domain_error("decode_layered: prefix length out of range");
    std::vector<double> out(static_cast<std::size_t>(cb.schedule.n), 0.0);
    for (int i = 0; i < k; ++i) {
        const auto& ml = cb.mat[static_cast<std::size_t>(i)];
        auto row = static_cast<std::size_t>(indices[static_cast<std::size_t>(i)]);
        if (row >= ml.reals.size() / static_cast<std::size_t>(cb.schedule.n))
            throw domain_error("decode_layered: index out of range");
        const double* ctr = ml.reals.data() + row * static_cast<std::size_t>(cb.schedule.n);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += ctr[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Complexity accounting.

struct ComplexityReport {
    double sum_sizes = 0.0;       // sum of M_i: the layered search bound
    double log_prod_sizes = 0.0;  // sum of ln M_i: the monolithic codebook size, in logs
    double total_rate = 0.0;      // (1/n) sum ln M_i
    double mean_examined = 0.0;   // per trial, summed over layers
    double max_examined = 0.0;
    std::int64_t trials = 0;
};

inline ComplexityReport complexity_report(const LayeredCodebook& cb,
                                          std::span<const EncodeResult> trials) {
    ComplexityReport rep;
    for (double lm : cb.schedule.layer_log_sizes) {
        rep.sum_sizes += std::exp(lm);
        rep.log_prod_sizes += lm;
    }
    rep.total_rate = rep.log_prod_sizes / static_cast<double>(cb.schedule.n);
    long double acc = 0.0L;
    std::int64_t counted = 0;
    for (const auto& t : trials) {
        if (t.examined.empty()) continue;
        double s = 0.0;
        for (double e : t.examined) s += e;
        acc += s;
        rep.max_examined = std::max(rep.max_examined, s);
        ++counted;
    }
    rep.trials = static_cast<std::int64_t>(trials.size());
    rep.mean_examined = counted ? static_cast<double>(acc / counted) : 0.0;
    return rep;
}

// Materialized codebooks serialize to the shared LRDC1 format.
inline CodebookFile to_codebook_file(const LayeredCodebook& cb) {
    if (!cb.materialized)
        throw size_error("to_codebook_file: virtual codebook has no explicit codeword list");
    CodebookFile f;
    f.kind = cb.schedule.source.kind;
    f.n = static_cast<std::uint32_t>(cb.schedule.n);
    for (const auto& ml : cb.mat) {
        CodebookFileLayer layer;
        if (f.kind == SourceKind::discrete) {
            layer.count = ml.bits.rows();
            layer.packed = pack_bits_bytes(ml.bits);
        } else {
            layer.count = ml.reals.size() / f.n;
            layer.reals = ml.reals;
        }
        f.layers.push_back(std::move(layer));
    }
    return f;
}

// Bernoulli(p) block, bit-packed.
inline std::vector<std::uint64_t> sample_bernoulli_word(Rng& rng, std::int64_t n, double p) {
    std::vector<std::uint64_t> out((static_cast<std::size_t>(n) + 63) / 64, 0);
    for (std::int64_t i = 0; i < n; ++i)
        if (rng.uniform01() < p) set_bit(out.data(), static_cast<std::size_t>(i));
    return out;
}

inline std::vector<double> sample_gaussian_word(Rng& rng, std::int64_t n, double variance) {
    std::vector<double> out(static_cast<std::size_t>(n));
    double sd = std::sqrt(variance);
    for (auto& v : out) v = sd * rng.gaussian();
    return out;
}

}  // namespace lrd
