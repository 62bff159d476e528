#pragma once

// Counter-keyed deterministic RNG. Every stream is derived from
// (seed, purpose, trial, ...) through mix_key, so results are independent of
// scheduling and worker count.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace lrd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (a + 0xbf58476d1ce4e5b9ULL));
    h = mix64(h ^ (b + 0x94d049bb133111ebULL));
    h = mix64(h ^ (c + 0x2545f4914f6cdd1dULL));
    return h;
}

inline std::uint64_t hash_words(std::span<const std::uint64_t> words, std::uint64_t seed = 0) {
    std::uint64_t h = mix64(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t w : words) h = mix64(h ^ w);
    return h;
}

inline std::uint64_t hash_doubles(std::span<const double> xs, std::uint64_t seed = 0) {
    std::uint64_t h = mix64(seed ^ 0x94d049bb133111ebULL);
    for (double x : xs) h = mix64(h ^ std::bit_cast<std::uint64_t>(x));
    return h;
}

// xoshiro256**
class Rng {
public:
    explicit Rng(std::uint64_t key) {
        std::uint64_t st = key;
        for (auto& w : state_) w = splitmix64(st);
    }

    std::uint64_t next() {
        std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // (0, 1): safe to take logs of either side
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t uniform_below(std::uint64_t bound) {
        // unbiased via rejection
        std::uint64_t threshold = (-bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Writes a uniformly random k-subset of {0,..,n-1} into the first k slots
    // of pool (pool must hold a permutation-ready scratch of size n).
    void sample_prefix(std::vector<std::int32_t>& pool, std::size_t n, std::size_t k) {
        pool.resize(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<std::int32_t>(i);
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lrd
