#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lrd/ratedist.hpp"
#include "lrd/rng.hpp"

using namespace lrd;

namespace {
const std::vector<std::vector<double>> kHamming2 = {{0, 1}, {1, 0}};

std::vector<std::vector<double>> hamming_matrix(std::size_t m) {
    std::vector<std::vector<double>> d(m, std::vector<double>(m, 1.0));
    for (std::size_t i = 0; i < m; ++i) d[i][i] = 0.0;
    return d;
}

// m-ary uniform Hamming closed form: ln m - h2(D) - D ln(m-1)
double rd_hamming_uniform(std::size_t m, double D) {
    return std::log(static_cast<double>(m)) - binary_entropy(D) -
           D * std::log(static_cast<double>(m - 1));
}
}  // namespace

TEST_CASE("binary entropy") {
    CHECK(binary_entropy(0.5) == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.11) == Catch::Approx(0.34651533).margin(1e-7));
    CHECK_THROWS_AS(binary_entropy(-0.1), domain_error);
    CHECK_THROWS_AS(binary_entropy(1.1), domain_error);
}

TEST_CASE("rd_binary closed form") {
    CHECK(rd_binary(0.11, 0.05) == Catch::Approx(0.14799009).margin(1e-7));
    CHECK(rd_binary(0.2, 0.2) == 0.0);
    CHECK(rd_binary(0.5, 0.0) == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    // symmetry reduction
    CHECK(rd_binary(0.8, 0.1) == Catch::Approx(rd_binary(0.2, 0.1)).epsilon(1e-14));
}

TEST_CASE("rd_gaussian closed form") {
    CHECK(rd_gaussian(1.0, 1.0) == 0.0);
    CHECK(rd_gaussian(1.0, 0.25) == Catch::Approx(0.5 * std::log(4.0)).epsilon(1e-14));
    CHECK(rd_gaussian(4.0, 1.0) == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(rd_gaussian(1.0, 0.0), domain_error);
}

TEST_CASE("dispersion closed forms") {
    CHECK(dispersion(SourceModel::gaussian(1.0), 0.3) == 0.5);
    CHECK(dispersion(SourceModel::gaussian(2.0), 3.0) == 0.0);  // D above sigma^2
    CHECK(dispersion(SourceModel::bernoulli(0.5), 0.2) == Catch::Approx(0.0).margin(1e-15));
    double lr = std::log(0.89 / 0.11);
    CHECK(dispersion(SourceModel::bernoulli(0.11), 0.05) ==
          Catch::Approx(0.11 * 0.89 * lr * lr).epsilon(1e-12));
    // D-independence inside (0, p)
    CHECK(dispersion(SourceModel::bernoulli(0.11), 0.02) ==
          dispersion(SourceModel::bernoulli(0.11), 0.09));
    CHECK_THROWS_AS(dispersion(SourceModel::bernoulli(0.11), 0.0), domain_error);
}

TEST_CASE("blahut_arimoto agrees with rd_binary") {
    CHECK(blahut_arimoto({0.8, 0.2}, kHamming2, 0.1) ==
          Catch::Approx(rd_binary(0.2, 0.1)).margin(1e-7));
    // zero-rate point
    CHECK(blahut_arimoto({0.8, 0.2}, kHamming2, 0.2) == Catch::Approx(0.0).margin(1e-9));
    // uniform ternary at D = 0.5
    CHECK(blahut_arimoto({1.0 / 3, 1.0 / 3, 1.0 / 3}, hamming_matrix(3), 0.5) ==
          Catch::Approx(rd_hamming_uniform(3, 0.5)).margin(1e-6));
    CHECK(blahut_arimoto({1.0 / 3, 1.0 / 3, 1.0 / 3}, hamming_matrix(3), 0.5) ==
          Catch::Approx(0.0589).margin(5e-5));
    // D = 0 returns H(P)
    double h = -(0.8 * std::log(0.8) + 0.2 * std::log(0.2));
    CHECK(blahut_arimoto({0.8, 0.2}, kHamming2, 0.0) == Catch::Approx(h).epsilon(1e-12));
    CHECK_THROWS_AS(blahut_arimoto({0.8, 0.2}, kHamming2, 0.9), domain_error);
}

TEST_CASE("blahut_arimoto random grid against the closed form") {
    Rng rng(mix_key(2024, 0xba));
    for (int i = 0; i < 20; ++i) {
        double p = 0.05 + 0.45 * rng.uniform01();
        double D = (0.05 + 0.9 * rng.uniform01()) * p;
        CHECK(blahut_arimoto({1.0 - p, p}, kHamming2, D) ==
              Catch::Approx(rd_binary(p, D)).margin(1e-6));
    }
}

TEST_CASE("blahut_arimoto rate nonincreasing in D") {
    double prev = 1e9;
    for (double D = 0.02; D <= 0.3; D += 0.02) {
        double r = blahut_arimoto({0.7, 0.3}, kHamming2, D);
        CHECK(r <= prev + 1e-9);
        prev = r;
    }
}

TEST_CASE("dispersion_numeric matches the Bernoulli closed form") {
    double got = dispersion_numeric({0.89, 0.11}, kHamming2, 0.05);
    CHECK(got == Catch::Approx(dispersion(SourceModel::bernoulli(0.11), 0.05)).margin(1e-3));
    // symmetric source has vanishing dispersion
    CHECK(dispersion_numeric({0.5, 0.5}, kHamming2, 0.2) == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("dispersion shift invariance across extensions") {
    auto g = rd_derivatives_numeric({0.89, 0.11}, kHamming2, 0.05);
    double v0 = variance_of({0.89, 0.11}, g);
    auto shifted = g;
    for (double& x : shifted) x += 0.37;
    CHECK(variance_of({0.89, 0.11}, shifted) == Catch::Approx(v0).margin(1e-12));
}

TEST_CASE("finite_n_rate composition") {
    auto bern = SourceModel::bernoulli(0.11);
    // eps = 1/2 collapses to R(D)
    CHECK(finite_n_rate(bern, 0.05, 0.5, 1000) ==
          Catch::Approx(rd_binary(0.11, 0.05)).margin(1e-10));
    double want = rd_binary(0.11, 0.05) +
                  std::sqrt(dispersion(bern, 0.05) / 1000.0) * q_inv(0.05);
    CHECK(finite_n_rate(bern, 0.05, 0.05, 1000) == Catch::Approx(want).epsilon(1e-12));
    CHECK(finite_n_rate(bern, 0.05, 0.05, 1000) == Catch::Approx(0.1820).margin(2e-4));

    auto gauss = SourceModel::gaussian(1.0);
    CHECK(finite_n_rate(gauss, 0.25, 0.05, 800) == Catch::Approx(0.7343).margin(2e-4));

    // the n^{-1/2} scaling is an identity: sqrt(n) (rate - R) is constant
    double c1 = std::sqrt(400.0) * (finite_n_rate(bern, 0.05, 0.1, 400) - rd_binary(0.11, 0.05));
    double c2 = std::sqrt(1600.0) * (finite_n_rate(bern, 0.05, 0.1, 1600) - rd_binary(0.11, 0.05));
    CHECK(c1 == Catch::Approx(c2).epsilon(1e-12));
}

TEST_CASE("source model validation") {
    CHECK_THROWS_AS(SourceModel::bernoulli(0.0), domain_error);   // zero-mass symbol
    CHECK_THROWS_AS(SourceModel::gaussian(0.0), domain_error);
    CHECK_THROWS_AS(SourceModel::discrete({0.5, 0.6}, kHamming2), domain_error);
    CHECK_THROWS_AS(SourceModel::discrete({0.5, 0.5}, {{0, 1}}), domain_error);
    CHECK(SourceModel::bernoulli(0.11).is_bernoulli());
}
