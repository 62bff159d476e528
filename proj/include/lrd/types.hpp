#pragma once

// Method-of-types machinery: types, type classes, exact type probabilities,
// and the exact Delta-R threshold computed by full type enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "lrd/errors.hpp"
#include "lrd/math.hpp"
#include "lrd/ratedist.hpp"

namespace lrd {

struct TypeVector {
    std::vector<std::int64_t> counts;

    std::int64_t n() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

    std::vector<double> frequencies() const {
        double nn = static_cast<double>(n());
        std::vector<double> f(counts.size());
        for (std::size_t a = 0; a < counts.size(); ++a) f[a] = static_cast<double>(counts[a]) / nn;
        return f;
    }

    bool operator==(const TypeVector&) const = default;
};

inline TypeVector type_of(std::span<const std::int32_t> sequence, std::size_t alphabet_size) {
    TypeVector t;
    t.counts.assign(alphabet_size, 0);
    for (std::int32_t s : sequence) {
        if (s < 0 || static_cast<std::size_t>(s) >= alphabet_size)
            throw domain_error("type_of: symbol outside alphabet");
        ++t.counts[static_cast<std::size_t>(s)];
    }
    return t;
}

inline constexpr std::int64_t kDefaultTypeCap = 2'000'000;

// All compositions of n into m nonnegative parts, lexicographic order.
inline std::vector<TypeVector> enumerate_types(std::int64_t n, std::size_t m,
                                               std::int64_t cap = kDefaultTypeCap) {
    if (n < 1 || m < 2) throw domain_error("enumerate_types: need n >= 1, m >= 2");
    double log_count = log_binomial(n + static_cast<std::int64_t>(m) - 1,
                                    static_cast<std::int64_t>(m) - 1);
    if (log_count > std::log(static_cast<double>(cap)) + 1e-9)
        throw size_error("enumerate_types: type count exceeds cap");

    std::vector<TypeVector> out;
    std::vector<std::int64_t> cur(m, 0);
    // recursive descent over prefix sums
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t pos, std::int64_t left) {
        if (pos + 1 == m) {
            cur[pos] = left;
            out.push_back(TypeVector{cur});
            return;
        }
        for (std::int64_t c = 0; c <= left; ++c) {
            cur[pos] = c;
            rec(pos + 1, left - c);
        }
    };
    rec(0, n);
    return out;
}

// ln |T_Q|
inline double log_type_class_size(const TypeVector& q) {
    return log_multinomial(q.n(), q.counts);
}

// ln Pr{type of X^n = Q} under iid P, exact in log domain.
inline double type_log_probability(const TypeVector& q, std::span<const double> pmf) {
    if (q.counts.size() != pmf.size()) throw domain_error("type_log_probability: size mismatch");
    double lp = log_type_class_size(q);
    for (std::size_t a = 0; a < pmf.size(); ++a) {
        if (q.counts[a] == 0) continue;
        if (!(pmf[a] > 0.0)) throw domain_error("type_log_probability: pmf must be positive");
        lp += static_cast<double>(q.counts[a]) * std::log(pmf[a]);
    }
    return lp;
}

struct DeltaRResult {
    double delta_r = 0.0;
    double achieved_tail_probability = 0.0;  // strictly < epsilon
    TypeVector threshold_type;
};

using TypeRateFn = std::function<double(const std::vector<double>& frequencies, double D)>;

// Exact Delta-R: the infimal delta such that
// Pr{ rd_fn(P_{X^n}, D) > rd_fn(P, D) + delta } < epsilon,
// found by sorting all types by rate value and accumulating exact tails.
// Types whose values coincide within 1e-12 move across the threshold together.
inline DeltaRResult delta_r(const SourceModel& source, double D, double epsilon, std::int64_t n,
                            const TypeRateFn& rd_fn, std::int64_t cap = kDefaultTypeCap) {
    if (source.kind != SourceKind::discrete) throw domain_error("delta_r: discrete sources only");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("delta_r: epsilon in (0,1)");
    const auto& pmf = source.pmf;
    std::vector<TypeVector> types = enumerate_types(n, pmf.size(), cap);

    double base = rd_fn(pmf, D);
    std::vector<double> value(types.size()), prob(types.size());
    for (std::size_t i = 0; i < types.size(); ++i) {
        value[i] = rd_fn(types[i].frequencies(), D);
        prob[i] = std::exp(type_log_probability(types[i], pmf));
    }
    std::vector<std::size_t> order(types.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });

    // walk tie-groups in decreasing rate order; S = mass strictly above the group
    long double above = 0.0L;
    DeltaRResult best;
    bool found = false;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long double group_mass = 0.0L;
        while (j < order.size() && value[order[i]] - value[order[j]] <= 1e-12) {
            group_mass += prob[order[j]];
            ++j;
        }
        if (static_cast<double>(above) < epsilon) {
            best.delta_r = value[order[i]] - base;
            best.achieved_tail_probability = static_cast<double>(above);
            best.threshold_type = types[order[i]];
            found = true;
        } else {
            break;  // S is nondecreasing; no later group qualifies
        }
        above += group_mass;
        i = j;
    }
    if (!found) throw domain_error("delta_r: no feasible threshold (epsilon too small?)");
    return best;
}

}  // namespace lrd
