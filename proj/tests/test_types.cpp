#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrd/rng.hpp"
#include "lrd/types.hpp"

using namespace lrd;

namespace {
TypeRateFn binary_rate_fn() {
    return [](const std::vector<double>& f, double D) { return rd_binary(f.at(1), D); };
}
}  // namespace

TEST_CASE("type_of counts symbols") {
    std::vector<std::int32_t> seq = {0, 1, 1, 0};
    auto t = type_of(seq, 2);
    CHECK(t.counts == std::vector<std::int64_t>{2, 2});

    std::vector<std::int32_t> zeros(7, 0);
    auto tz = type_of(zeros, 2);
    CHECK(tz.counts == std::vector<std::int64_t>{7, 0});

    // permutation invariance
    std::vector<std::int32_t> perm = {1, 0, 0, 1};
    CHECK(type_of(perm, 2) == t);

    std::vector<std::int32_t> bad = {0, 2};
    CHECK_THROWS_AS(type_of(bad, 2), domain_error);
}

TEST_CASE("enumerate_types counts and order") {
    auto t52 = enumerate_types(5, 2);
    CHECK(t52.size() == 6);
    auto t23 = enumerate_types(2, 3);
    CHECK(t23.size() == 6);  // stars and bars C(4,2)
    // lexicographic order
    CHECK(std::is_sorted(t23.begin(), t23.end(), [](const TypeVector& a, const TypeVector& b) {
        return a.counts < b.counts;
    }));
    // count is at most (n+1)^m
    for (std::int64_t n : {3, 6, 9}) {
        for (std::size_t m : {std::size_t{2}, std::size_t{3}}) {
            auto ts = enumerate_types(n, m);
            CHECK(static_cast<double>(ts.size()) <=
                  std::pow(static_cast<double>(n + 1), static_cast<double>(m)));
            for (const auto& t : ts) CHECK(t.n() == n);
        }
    }
    CHECK_THROWS_AS(enumerate_types(1000, 5), size_error);
}

TEST_CASE("type probabilities sum to one") {
    std::vector<double> pmf = {0.3, 0.7};
    long double total = 0.0L;
    for (const auto& q : enumerate_types(12, 2))
        total += std::exp(static_cast<long double>(type_log_probability(q, pmf)));
    CHECK(static_cast<double>(total) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("type class size and bounds") {
    TypeVector q{{2, 2}};
    CHECK(std::exp(log_type_class_size(q)) == Catch::Approx(6.0).epsilon(1e-12));

    // (1/n) ln|T_Q| within [H(Q) - m ln(n+1)/n, H(Q)]
    for (std::int64_t n : {8, 16, 32, 64}) {
        for (std::int64_t k = 0; k <= n; k += n / 4) {
            TypeVector t{{n - k, k}};
            double per_symbol = log_type_class_size(t) / static_cast<double>(n);
            double h = binary_entropy(static_cast<double>(k) / n);
            CHECK(per_symbol <= h + 1e-12);
            CHECK(per_symbol >= h - 2.0 * std::log(static_cast<double>(n + 1)) / n - 1e-12);
        }
    }
}

TEST_CASE("exchangeable consistency of type probability") {
    // P^n(x^n) |T_{x^n}| = exp(type_log_probability) in log domain
    std::vector<double> pmf = {0.25, 0.75};
    std::int64_t n = 30, k = 11;
    TypeVector q{{n - k, k}};
    double log_seq_prob = (n - k) * std::log(pmf[0]) + k * std::log(pmf[1]);
    CHECK(type_log_probability(q, pmf) ==
          Catch::Approx(log_seq_prob + log_type_class_size(q)).margin(1e-12));
}

namespace {
// independent oracle: scan candidate thresholds directly and sum tails
DeltaRResult delta_r_brute(double p, double D, double eps, std::int64_t n) {
    auto types = enumerate_types(n, 2);
    std::vector<double> value(types.size()), prob(types.size());
    double base = rd_binary(p, D);
    for (std::size_t i = 0; i < types.size(); ++i) {
        value[i] = rd_binary(types[i].frequencies()[1], D);
        prob[i] = std::exp(type_log_probability(types[i], {1.0 - p, p}));
    }
    double best = std::numeric_limits<double>::infinity();
    double best_tail = 0.0;
    TypeVector best_type;
    for (std::size_t i = 0; i < types.size(); ++i) {
        double delta = value[i] - base;
        long double tail = 0.0L;
        for (std::size_t j = 0; j < types.size(); ++j)
            if (value[j] > base + delta + 1e-12) tail += prob[j];
        if (static_cast<double>(tail) < eps && delta < best) {
            best = delta;
            best_tail = static_cast<double>(tail);
            best_type = types[i];
        }
    }
    return {best, best_tail, best_type};
}
}  // namespace

TEST_CASE("delta_r exact against brute-force enumeration") {
    auto src = SourceModel::bernoulli(0.2);
    auto got = delta_r(src, 0.1, 0.1, 20, binary_rate_fn());
    auto want = delta_r_brute(0.2, 0.1, 0.1, 20);
    CHECK(got.delta_r == Catch::Approx(want.delta_r).margin(1e-12));
    CHECK(got.achieved_tail_probability == Catch::Approx(want.achieved_tail_probability).margin(1e-12));
    CHECK(got.achieved_tail_probability < 0.1);

    // a couple more parameter points
    for (double eps : {0.03, 0.25}) {
        auto g = delta_r(src, 0.08, eps, 25, binary_rate_fn());
        auto w = delta_r_brute(0.2, 0.08, eps, 25);
        CHECK(g.delta_r == Catch::Approx(w.delta_r).margin(1e-12));
        CHECK(g.achieved_tail_probability < eps);
    }
}

TEST_CASE("delta_r near epsilon = 1 is nonpositive when some type is below base") {
    auto src = SourceModel::bernoulli(0.2);
    auto got = delta_r(src, 0.1, 0.999999, 20, binary_rate_fn());
    CHECK(got.delta_r <= 0.0);
}

TEST_CASE("delta_r monotone nonincreasing in epsilon") {
    auto src = SourceModel::bernoulli(0.2);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.02, 0.05, 0.1, 0.3, 0.6}) {
        double d = delta_r(src, 0.1, eps, 50, binary_rate_fn()).delta_r;
        CHECK(d <= prev + 1e-15);
        prev = d;
    }
}

TEST_CASE("delta_r infimum witness") {
    // moving the threshold down one sorted type group pushes the tail to >= eps
    auto src = SourceModel::bernoulli(0.2);
    double eps = 0.1, D = 0.1;
    std::int64_t n = 40;
    auto got = delta_r(src, D, eps, n, binary_rate_fn());
    auto types = enumerate_types(n, 2);
    double base = rd_binary(0.2, D);
    double thresh_value = base + got.delta_r;
    // tail including the threshold group itself
    long double tail_with_group = 0.0L;
    for (const auto& q : types) {
        double v = rd_binary(q.frequencies()[1], D);
        if (v > thresh_value - 1e-12)
            tail_with_group += std::exp(type_log_probability(q, {0.8, 0.2}));
    }
    bool threshold_is_min = true;
    for (const auto& q : types)
        if (rd_binary(q.frequencies()[1], D) < thresh_value - 1e-12) threshold_is_min = false;
    if (!threshold_is_min) CHECK(static_cast<double>(tail_with_group) >= eps);
}

TEST_CASE("delta_r respects the enumeration cap") {
    auto src = SourceModel::bernoulli(0.2);
    CHECK_THROWS_AS(delta_r(src, 0.1, 0.1, 100, binary_rate_fn(), 50), size_error);
}
