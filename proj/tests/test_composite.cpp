#include <catch2/catch_amalgamated.hpp>

#include "cehr/composite.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace cehr;

namespace {

ScenarioSpec scenario(double p1, double p2, double hr1, double hr2, double rho, double k1, double k2) {
    ScenarioSpec s;
    s.endpoint1 = {p1, hr1, k1, true};
    s.endpoint2 = {p2, hr2, k2, false};
    s.rho = rho;
    return s;
}

ScenarioSpec zodiac(double k2) { return scenario(0.59, 0.74, 0.91, 0.77, 0.5, 1.0, k2); }

double theta_of(const JointGroupModel& m) { return m.copula().is_independence() ? 0.0 : m.copula().theta(); }

}  // namespace

TEST_CASE("Composite survival is the copula of the marginal survivals", "[composite]") {
    const auto models = build_scenario_models(zodiac(2.0));
    const auto& m = models.control;
    const double th = theta_of(m);
    for (double t : {1e-3, 0.2, 0.6, 1.0}) {
        const double s1 = m.marginal1().survival(t), s2 = m.marginal2().survival(t);
        CHECK_THAT(composite_survival(m, t), WithinAbs(oracle::frank(th, s1, s2), 1e-14));
    }
    CHECK(composite_survival(m, 0.0) == 1.0);
}

TEST_CASE("Composite hazard is minus the log-derivative of composite survival", "[composite][property]") {
    for (const auto& spec : {zodiac(1.0), zodiac(2.0), scenario(0.3, 0.5, 0.7, 0.9, 0.3, 0.5, 2.0)}) {
        const auto models = build_scenario_models(spec);
        for (const auto* m : {&models.control, &models.treatment}) {
            for (double t : {0.01, 0.3, 0.9}) {
                const double h = 1e-6 * t;
                const double fd = -(std::log(m->survival(t + h)) - std::log(m->survival(t - h))) / (2.0 * h);
                CHECK_THAT(composite_hazard(*m, t), WithinRel(fd, 1e-6));
                CHECK_THAT(m->density(t), WithinRel(m->hazard(t) * m->survival(t), 1e-12));
            }
        }
    }
}

TEST_CASE("Cause-specific hazards add up to the composite hazard", "[composite]") {
    const auto models = build_scenario_models(zodiac(2.0));
    for (double t : {0.05, 0.5, 1.0}) {
        const auto& m = models.treatment;
        CHECK_THAT(m.cause_specific_hazard1(t) + m.cause_specific_hazard2(t), WithinRel(m.hazard(t), 1e-12));
    }
}

TEST_CASE("Observed non-fatal probability matches the closed form under independence", "[composite]") {
    // Exponential rates l1, l2: P(T2 <= tau, T2 < T1) = l2 / (l1 + l2) (1 - e^{-(l1 + l2) tau}).
    const double l1 = 0.8, l2 = 1.7, tau = 1.3;
    const JointGroupModel m(WeibullMarginal(1.0, 1.0 / l1), WeibullMarginal(1.0, 1.0 / l2), FrankCopula::independence());
    const double expected = l2 / (l1 + l2) * -std::expm1(-(l1 + l2) * tau);
    CHECK_THAT(observed_nonfatal_probability(m, tau), WithinRel(expected, 1e-10));
}

TEST_CASE("Observed non-fatal probability matches an independent quadrature", "[composite]") {
    for (double k1 : {0.5, 1.0, 2.0}) {
        for (double k2 : {0.5, 1.0, 2.0}) {
            const double th = theta_from_rho(0.5);
            const JointGroupModel m(WeibullMarginal(k1, 1.4), WeibullMarginal(k2, 0.9), FrankCopula::from_theta(th));
            const double ref = oracle::observed_nonfatal(th, k1, 1.4, k2, 0.9, 1.0);
            CHECK_THAT(m.observed_nonfatal_probability(1.0), WithinRel(ref, 1e-9));
        }
    }
}

TEST_CASE("Non-fatal calibration round trips", "[composite][calibration]") {
    for (double rho : {0.0, 0.1, 0.5, 0.9}) {
        for (double k1 : {0.5, 2.0}) {
            for (double k2 : {0.5, 1.0, 2.0}) {
                for (double p2 : {0.1, 0.5, 0.74}) {
                    const auto spec = scenario(0.3, p2, 0.8, 0.8, rho, k1, k2);
                    const auto models = build_scenario_models(spec);
                    const auto& m = models.control;
                    const double th = theta_of(m);
                    CHECK_THAT(m.marginal1().cdf(1.0), WithinAbs(0.3, 1e-12));
                    const double ref = oracle::observed_nonfatal(th, k1, m.marginal1().scale(), k2,
                                                                 m.marginal2().scale(), 1.0);
                    CHECK_THAT(ref, WithinAbs(p2, 1e-8));
                }
            }
        }
    }
}

TEST_CASE("Worked example: equal exponential marginals under independence", "[composite][calibration]") {
    // With b2 = b1 and rate l, P(T2 < tau, T2 < T1) = (1 - e^{-2 l tau}) / 2; for
    // P(T1 <= tau) = 0.5 that is 0.375.
    const auto spec = scenario(0.5, 0.375, 1.0, 1.0, 0.0, 1.0, 1.0);
    const double b1 = calibrate_fatal_scale(1.0, 0.5, 1.0);
    CHECK_THAT(calibrate_nonfatal_scale(spec), WithinRel(b1, 1e-10));
    CHECK_THAT(b1, WithinRel(1.0 / std::log(2.0), 1e-14));
}

TEST_CASE("Unreachable non-fatal probability is reported as infeasible with its supremum", "[composite]") {
    const auto spec = scenario(0.5, 0.999, 0.8, 0.8, 0.5, 1.0, 2.0);
    try {
        (void)calibrate_nonfatal_scale(spec);
        FAIL("expected infeasible_error");
    } catch (const infeasible_error& e) {
        CHECK(e.target() == 0.999);
        CHECK(e.supremum() < 0.999);
        CHECK(e.supremum() > 0.9);
    }
}

TEST_CASE("Scenario validation names the offending field", "[composite]") {
    auto field_of = [](ScenarioSpec s) {
        try {
            s.validate();
        } catch (const invalid_input& e) {
            return e.field();
        }
        return std::string("none");
    };
    auto s = zodiac(1.0);
    CHECK(field_of(s) == "none");
    s.endpoint2.p0 = 1.0;
    CHECK(field_of(s) == "endpoint2.p0");
    s = zodiac(1.0);
    s.endpoint1.hr = 1.5;
    CHECK(field_of(s) == "endpoint1.hr");
    s = zodiac(1.0);
    s.rho = 0.96;
    CHECK(field_of(s) == "rho");
    s = zodiac(1.0);
    s.endpoint2.fatal = true;
    CHECK(field_of(s) == "endpoint1.fatal");
    s = zodiac(1.0);
    s.numeric.grid_points = 2;
    CHECK(field_of(s) == "numeric.grid_points");
}

TEST_CASE("Treatment marginals are proportional to control with a shared copula", "[composite]") {
    const auto spec = zodiac(2.0);
    const auto models = build_scenario_models(spec);
    CHECK(models.treatment.copula().theta() == models.control.copula().theta());
    for (double t : {0.1, 0.7}) {
        CHECK_THAT(models.treatment.marginal1().hazard(t) / models.control.marginal1().hazard(t), WithinRel(0.91, 1e-13));
        CHECK_THAT(models.treatment.marginal2().hazard(t) / models.control.marginal2().hazard(t), WithinRel(0.77, 1e-13));
    }
}

TEST_CASE("Independence with equal component hazard ratios gives a constant HR*", "[composite][property]") {
    for (double k1 : {0.5, 1.0, 2.0}) {
        for (double k2 : {0.5, 1.0, 2.0}) {
            for (double hr : {0.6, 0.85}) {
                const auto curve = hr_curve(scenario(0.3, 0.5, hr, hr, 0.0, k1, k2));
                double dev = std::abs(curve.hr_limit_at_zero - hr);
                for (double x : curve.hr_star) dev = std::max(dev, std::abs(x - hr));
                CHECK(dev < 1e-9);
            }
        }
    }
}

TEST_CASE("Unit hazard ratios give HR* identically one", "[composite][property]") {
    for (double rho : {0.0, 0.5}) {
        const auto curve = hr_curve(scenario(0.5, 0.3, 1.0, 1.0, rho, 0.5, 2.0));
        for (double x : curve.hr_star) CHECK_THAT(x, WithinAbs(1.0, 1e-12));
        CHECK(curve.hr_limit_at_zero == 1.0);
    }
}

TEST_CASE("Under independence HR* lies between the component hazard ratios", "[composite][property]") {
    for (double k1 : {0.5, 1.0, 2.0}) {
        for (double k2 : {0.5, 1.0, 2.0}) {
            const auto curve = hr_curve(scenario(0.1, 0.5, 0.6, 0.9, 0.0, k1, k2));
            for (double x : curve.hr_star) {
                CHECK(x >= 0.6 - 1e-12);
                CHECK(x <= 0.9 + 1e-12);
            }
        }
    }
}

TEST_CASE("HR* approaches its analytic limit at the origin", "[composite]") {
    for (const auto& spec : {zodiac(1.0), zodiac(2.0), scenario(0.3, 0.5, 0.6, 0.9, 0.3, 2.0, 0.5),
                             scenario(0.3, 0.5, 0.6, 0.9, 0.3, 0.5, 0.5)}) {
        const auto models = build_scenario_models(spec);
        const double lim = hr_limit_at_zero(spec, models);
        const double t = 1e-12;
        CHECK_THAT(models.treatment.hazard(t) / models.control.hazard(t), WithinAbs(lim, 1e-4));
    }
}

TEST_CASE("HR curve layout", "[composite]") {
    auto spec = zodiac(1.0);
    spec.numeric.grid_points = 50;
    spec.tau = 2.0;
    const auto c = hr_curve(spec);
    REQUIRE(c.size() == 50);
    CHECK(c.times.front() == 2.0 * 1e-4);
    CHECK(c.times.back() == 2.0);
    CHECK(std::is_sorted(c.times.begin(), c.times.end()));
    CHECK(c.s_star_0.size() == 50);
    CHECK(c.s_star_1.size() == 50);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.s_star_1[i] >= c.s_star_0[i]);
    CHECK_THAT(c.hr_at(c.times[10]), WithinRel(c.hr_star[10], 1e-15));
}

TEST_CASE("Monte Carlo: composite survival and observed non-fatal probability", "[composite][montecarlo]") {
    const auto spec = zodiac(2.0);
    const auto models = build_scenario_models(spec);
    const auto& m = models.control;
    const double th = theta_of(m);
    const auto draws = oracle::simulate_composite(th, m.marginal1().shape(), m.marginal1().scale(), m.marginal2().shape(),
                                                  m.marginal2().scale(), 0.4, 1.0, 1'000'000, 99);
    INFO("S*(0.4) " << m.survival(0.4) << " mc " << draws.survival_at_t.mean());
    CHECK(draws.survival_at_t.z(m.survival(0.4)) < 3.0);
    INFO("P_obs " << spec.endpoint2.p0 << " mc " << draws.observed_nonfatal.mean());
    CHECK(draws.observed_nonfatal.z(spec.endpoint2.p0) < 3.0);
    CHECK(draws.spearman_term.z(0.5) < 3.0);
}
