#include <catch2/catch_amalgamated.hpp>

#include "cehr/distributions.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cehr::WeibullMarginal;

TEST_CASE("Weibull survival and hazard match the closed form", "[distributions]") {
    for (double k : {0.5, 1.0, 2.0, 3.7}) {
        for (double b : {0.2, 1.0, 4.5}) {
            const WeibullMarginal m(k, b);
            for (double t : {1e-6, 0.01, 0.3, 1.0, 2.5}) {
                CHECK_THAT(m.survival(t), WithinRel(oracle::weibull_survival(t, k, b), 1e-14));
                CHECK_THAT(m.density(t), WithinRel(oracle::weibull_density(t, k, b), 1e-13));
                CHECK_THAT(m.hazard(t), WithinRel(k / b * std::pow(t / b, k - 1.0), 1e-13));
                CHECK_THAT(m.cumulative_hazard(t), WithinRel(std::pow(t / b, k), 1e-14));
                CHECK_THAT(m.cdf(t) + m.survival(t), WithinAbs(1.0, 1e-15));
            }
        }
    }
}

TEST_CASE("Weibull density is minus the derivative of survival", "[distributions]") {
    const WeibullMarginal m(1.7, 0.8);
    const double h = 1e-6;
    for (double t : {0.05, 0.4, 1.1}) {
        const double fd = -(m.survival(t + h) - m.survival(t - h)) / (2.0 * h);
        CHECK_THAT(m.density(t), WithinRel(fd, 1e-8));
    }
}

TEST_CASE("Weibull hazard at the origin", "[distributions]") {
    CHECK(std::isinf(WeibullMarginal(0.5, 1.0).hazard(0.0)));
    CHECK_THAT(WeibullMarginal(1.0, 2.0).hazard(0.0), WithinRel(0.5, 1e-15));
    CHECK(WeibullMarginal(2.0, 1.0).hazard(0.0) == 0.0);
    CHECK(WeibullMarginal(2.0, 1.0).survival(0.0) == 1.0);
}

TEST_CASE("Weibull rejects invalid parameters and times", "[distributions]") {
    CHECK_THROWS_AS(WeibullMarginal(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(WeibullMarginal(1.0, -1.0), std::domain_error);
    CHECK_THROWS_AS(WeibullMarginal(std::numeric_limits<double>::infinity(), 1.0), std::domain_error);
    CHECK_THROWS_AS(WeibullMarginal(1.0, 1.0).survival(-0.1), std::domain_error);
}

TEST_CASE("Quantile inverts survival", "[distributions]") {
    const WeibullMarginal m(0.5, 0.3);
    for (double s : {0.999, 0.7, 0.2, 1e-6}) CHECK_THAT(m.survival(m.quantile_survival(s)), WithinRel(s, 1e-13));
}

TEST_CASE("Fatal scale calibration reproduces the event probability", "[distributions][calibration]") {
    for (double k : {0.5, 1.0, 2.0}) {
        for (double p : {0.1, 0.3, 0.59, 0.9}) {
            for (double tau : {1.0, 3.0}) {
                const WeibullMarginal m(k, cehr::calibrate_fatal_scale(k, p, tau));
                CHECK_THAT(m.cdf(tau), WithinAbs(p, 1e-12));
            }
        }
    }
    CHECK_THROWS_AS(cehr::calibrate_fatal_scale(1.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(cehr::calibrate_fatal_scale(1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("Proportional marginal has survival S^hr and constant hazard ratio", "[distributions]") {
    const WeibullMarginal m(2.0, 0.7);
    const WeibullMarginal t = cehr::proportional_marginal(m, 0.77);
    CHECK(t.shape() == m.shape());
    for (double x : {0.01, 0.5, 1.0}) {
        CHECK_THAT(t.survival(x), WithinRel(std::pow(m.survival(x), 0.77), 1e-13));
        CHECK_THAT(t.hazard(x) / m.hazard(x), WithinRel(0.77, 1e-13));
    }
    CHECK(cehr::proportional_marginal(m, 1.0) == m);
    CHECK_THROWS_AS(cehr::proportional_marginal(m, 1.2), std::domain_error);
}
