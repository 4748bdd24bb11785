#include <catch2/catch_amalgamated.hpp>

#include "cehr/copula.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cehr::FrankCopula;

TEST_CASE("Frank copula matches the textbook closed form", "[copula]") {
    for (double theta : {1e-7, 0.05, 1.0, 3.445987654060, 10.0}) {
        const auto c = FrankCopula::from_theta(theta);
        for (double u : {0.01, 0.2, 0.5, 0.93}) {
            for (double v : {0.03, 0.4, 0.77, 0.999}) {
                CHECK_THAT(c.value(u, v), WithinAbs(oracle::frank(theta, u, v), 1e-13));
                CHECK_THAT(c.partial_u(u, v), WithinAbs(oracle::frank_du(theta, u, v), 1e-12));
                CHECK_THAT(c.partial_v(u, v), WithinAbs(oracle::frank_dv(theta, u, v), 1e-12));
            }
        }
    }
}

TEST_CASE("Frank copula under strong dependence matches high-precision references", "[copula]") {
    // 50-digit mpmath evaluations of the closed form and its derivatives.
    struct Ref {
        double u, v, c, cu, cv;
    };
    const auto c = FrankCopula::from_theta(30.0);
    for (const auto& r : {Ref{0.93, 0.999, 0.92987591944484564, 0.99628450294969332, 0.12571693880523938},
                          Ref{0.5, 0.4, 0.39838043181095106, 0.047425596290530892, 0.95257412682243319},
                          Ref{0.2, 0.77, 0.19999999875569354, 0.99999996257804718, 3.7366850841380093e-8}}) {
        CHECK_THAT(c.value(r.u, r.v), WithinAbs(r.c, 1e-15));
        CHECK_THAT(c.partial_u(r.u, r.v), WithinAbs(r.cu, 1e-14));
        CHECK_THAT(c.partial_v(r.u, r.v), WithinAbs(r.cv, 1e-14));
    }
}

TEST_CASE("Frank copula boundary conditions, symmetry and Frechet bounds", "[copula]") {
    const auto c = FrankCopula::from_theta(4.0);
    for (double u : {0.0, 0.1, 0.6, 1.0}) {
        CHECK_THAT(c.value(u, 1.0), WithinAbs(u, 1e-15));
        CHECK_THAT(c.value(1.0, u), WithinAbs(u, 1e-15));
        CHECK_THAT(c.value(u, 0.0), WithinAbs(0.0, 1e-15));
    }
    for (double u : {0.05, 0.3, 0.8}) {
        for (double v : {0.1, 0.5, 0.95}) {
            const double x = c.value(u, v);
            CHECK_THAT(x, WithinAbs(c.value(v, u), 1e-15));
            CHECK(x >= std::max(u + v - 1.0, 0.0) - 1e-15);
            CHECK(x <= std::min(u, v) + 1e-15);
            CHECK(x >= u * v);  // positive dependence for theta > 0
        }
    }
}

TEST_CASE("Frank copula is 2-increasing", "[copula]") {
    const auto c = FrankCopula::from_theta(7.0);
    const double g[] = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
    for (int i = 0; i + 1 < 7; ++i)
        for (int j = 0; j + 1 < 7; ++j) {
            const double vol = c.value(g[i + 1], g[j + 1]) - c.value(g[i], g[j + 1]) - c.value(g[i + 1], g[j]) +
                               c.value(g[i], g[j]);
            CHECK(vol >= -1e-15);
        }
}

TEST_CASE("Frank copula partial derivatives agree with finite differences", "[copula][property]") {
    const double h = 1e-5;
    for (double theta : {0.5, 3.0, 12.0}) {
        const auto c = FrankCopula::from_theta(theta);
        for (double u : {0.1, 0.45, 0.9}) {
            for (double v : {0.05, 0.5, 0.85}) {
                const double du = (c.value(u + h, v) - c.value(u - h, v)) / (2.0 * h);
                const double dv = (c.value(u, v + h) - c.value(u, v - h)) / (2.0 * h);
                CHECK_THAT(c.partial_u(u, v), WithinAbs(du, 1e-6));
                CHECK_THAT(c.partial_v(u, v), WithinAbs(dv, 1e-6));
            }
        }
    }
}

TEST_CASE("Independence copula is the product", "[copula]") {
    const auto c = FrankCopula::independence();
    CHECK(c.is_independence());
    CHECK_THAT(c.value(0.3, 0.6), WithinAbs(0.18, 1e-16));
    CHECK_THAT(c.partial_u(0.3, 0.6), WithinAbs(0.6, 1e-16));
    CHECK_THAT(c.partial_v(0.3, 0.6), WithinAbs(0.3, 1e-16));
    // Small theta approaches independence continuously.
    const auto near = FrankCopula::from_theta(1e-7);
    CHECK_THAT(near.value(0.3, 0.6), WithinAbs(0.18, 1e-8));
    CHECK_THAT(near.value(0.3, 0.6), WithinAbs(oracle::frank(1e-7, 0.3, 0.6), 1e-15));
}

TEST_CASE("Frank copula rejects invalid arguments", "[copula]") {
    CHECK_THROWS_AS(FrankCopula::from_theta(0.0), std::domain_error);
    CHECK_THROWS_AS(FrankCopula::from_theta(-1.0), std::domain_error);
    CHECK_THROWS_AS(FrankCopula::from_theta(2.0).value(1.2, 0.5), std::domain_error);
    CHECK_THROWS_AS(cehr::theta_from_rho(0.96), std::domain_error);
    CHECK_THROWS_AS(cehr::theta_from_rho(-0.1), std::domain_error);
}

TEST_CASE("Debye function reference values", "[copula]") {
    // D_1(x) = 1 - x/4 + x^2/36 - x^4/3600 + x^6/211680 - x^8/10886400 + ...
    for (double x : {0.01, 0.1, 0.3}) {
        const double series = 1.0 - x / 4.0 + x * x / 36.0 - std::pow(x, 4) / 3600.0 + std::pow(x, 6) / 211680.0 -
                              std::pow(x, 8) / 10886400.0;
        CHECK_THAT(cehr::debye(1, x), WithinAbs(series, 1e-12));
    }
    // Arbitrary-precision reference (mpmath quad of t/(e^t - 1)).
    CHECK_THAT(cehr::debye(1, 1.0), WithinAbs(0.777504634112248, 1e-12));
    // D_k decreases from D_k(0+) = 1.
    CHECK_THAT(cehr::debye(2, 1e-9), WithinAbs(1.0, 1e-9));
    CHECK(cehr::debye(2, 2.0) < cehr::debye(2, 1.0));
    CHECK_THROWS_AS(cehr::debye(1, 0.0), std::domain_error);
}

TEST_CASE("Spearman rho from Debye functions equals the copula double integral", "[copula]") {
    for (double theta : {0.2, 1.0, 3.0, 8.0, 20.0}) {
        CHECK_THAT(cehr::spearman_rho(theta), WithinAbs(oracle::spearman_by_double_integral(theta), 1e-10));
    }
    CHECK_THAT(cehr::spearman_rho(3.0), WithinAbs(0.448714964139, 1e-11));
}

TEST_CASE("theta_from_rho inverts spearman_rho", "[copula][calibration]") {
    for (double rho : {1e-4, 0.1, 0.3, 0.5, 0.8, 0.95}) {
        const double theta = cehr::theta_from_rho(rho);
        CHECK_THAT(cehr::spearman_rho(theta), WithinAbs(rho, 1e-10));
    }
    CHECK_THAT(cehr::theta_from_rho(0.5), WithinRel(3.445987654060, 1e-10));
    CHECK(cehr::copula_from_rho(0.0).is_independence());
}

TEST_CASE("Conditional-inverse sampling reproduces the copula", "[copula][montecarlo]") {
    const auto c = cehr::copula_from_rho(0.5);
    std::mt19937_64 rng(20240611);
    constexpr std::size_t n = 1'000'000;
    oracle::MeanEstimate joint, rho, marginal_v;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [u, v] = c.sample_pair(oracle::open_unit(rng), oracle::open_unit(rng));
        joint.add(u <= 0.3 && v <= 0.6 ? 1.0 : 0.0);
        marginal_v.add(v <= 0.25 ? 1.0 : 0.0);
        rho.add(12.0 * u * v - 3.0);
    }
    CHECK(joint.z(c.value(0.3, 0.6)) < 3.0);
    CHECK(marginal_v.z(0.25) < 3.0);
    CHECK(rho.z(0.5) < 3.0);
}

TEST_CASE("Frailty-sampled Spearman rho matches theta_from_rho", "[copula][montecarlo]") {
    for (double rho : {0.1, 0.5}) {
        oracle::FrankFrailtySampler draw(cehr::theta_from_rho(rho), 7 + static_cast<std::uint64_t>(rho * 100));
        oracle::MeanEstimate est;
        for (std::size_t i = 0; i < 1'000'000; ++i) {
            const auto [u, v] = draw();
            est.add(12.0 * u * v - 3.0);
        }
        INFO("rho " << rho << " estimate " << est.mean() << " se " << est.standard_error());
        CHECK(est.z(rho) < 3.0);
    }
}
