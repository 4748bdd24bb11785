#pragma once

// Composite endpoint T* = min(T1, T2) for two Weibull component times joined
// by a Frank copula on their survival functions, S*(t) = C(S1(t), S2(t)).
// Component 1 is fatal: component 2 is only observed when it precedes T1.

#include "cehr/copula.hpp"
#include "cehr/distributions.hpp"
#include "cehr/errors.hpp"
#include "cehr/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace cehr {

enum class AhrWeighting { density, uniform };

inline const char* to_string(AhrWeighting w) { return w == AhrWeighting::density ? "density" : "uniform"; }

struct NumericConfig {
    int grid_points = 2000;
    /// Grid starts at epsilon * tau.
    double epsilon = 1e-4;
    AhrWeighting ahr_weighting = AhrWeighting::density;
    /// Relative tolerance of the observed non-fatal probability quadrature.
    double quadrature_rel_tol = 1e-9;
    /// Largest admissible P(T2 <= tau) for the non-fatal marginal. Bounds the
    /// scale search from below; targets beyond what this allows are infeasible.
    double max_marginal_probability = 1.0 - 1e-9;
    /// Golden-section tolerance (in time units relative to tau) for extremes.
    double extreme_tol = 1e-8;

    void validate() const {
        if (grid_points < 3) throw invalid_input("numeric.grid_points", "must be at least 3");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw invalid_input("numeric.epsilon", "must lie in (0,1)");
        if (!(quadrature_rel_tol > 0.0 && quadrature_rel_tol < 1e-3)) {
            throw invalid_input("numeric.quadrature_rel_tol", "must lie in (0, 1e-3)");
        }
        if (!(max_marginal_probability > 0.5 && max_marginal_probability < 1.0)) {
            throw invalid_input("numeric.max_marginal_probability", "must lie in (0.5, 1)");
        }
        if (!(extreme_tol > 0.0 && extreme_tol < 1e-2)) throw invalid_input("numeric.extreme_tol", "must lie in (0, 1e-2)");
    }
};

struct EndpointSpec {
    /// Probability of observing the event in the control arm over [0, tau].
    double p0 = 0.0;
    double hr = 1.0;
    double shape = 1.0;
    bool fatal = false;
};

struct ScenarioSpec {
    EndpointSpec endpoint1{0.5, 1.0, 1.0, true};
    EndpointSpec endpoint2{0.5, 1.0, 1.0, false};
    /// Spearman's rho between component times, shared by both arms.
    double rho = 0.0;
    double tau = 1.0;
    NumericConfig numeric{};

    void validate() const {
        auto check_endpoint = [](const EndpointSpec& e, const std::string& name) {
            if (!(e.p0 > 0.0 && e.p0 < 1.0)) throw invalid_input(name + ".p0", "must lie in (0,1)");
            if (!(e.hr > 0.0 && e.hr <= 1.0)) throw invalid_input(name + ".hr", "must lie in (0,1]");
            if (!(e.shape > 0.0 && std::isfinite(e.shape))) throw invalid_input(name + ".shape", "must be positive");
        };
        check_endpoint(endpoint1, "endpoint1");
        check_endpoint(endpoint2, "endpoint2");
        if (!endpoint1.fatal || endpoint2.fatal) {
            throw invalid_input("endpoint1.fatal", "endpoint1 must be the only fatal endpoint");
        }
        if (!(rho >= 0.0 && rho <= 0.95)) throw invalid_input("rho", "must lie in [0, 0.95]");
        if (!(tau > 0.0 && std::isfinite(tau))) throw invalid_input("tau", "must be positive");
        numeric.validate();
    }
};

/// Joint law of (T1, T2) in one arm.
class JointGroupModel {
public:
    JointGroupModel(WeibullMarginal fatal, WeibullMarginal nonfatal, FrankCopula copula)
        : m1_(fatal), m2_(nonfatal), copula_(copula) {}

    const WeibullMarginal& marginal1() const noexcept { return m1_; }
    const WeibullMarginal& marginal2() const noexcept { return m2_; }
    const FrankCopula& copula() const noexcept { return copula_; }

    double survival(double t) const {
        check_time(t);
        return copula_.value(m1_.survival(t), m2_.survival(t));
    }

    /// -dS*/dt = C_u(S1,S2) f1 + C_v(S1,S2) f2
    double density(double t) const {
        if (!(t > 0.0)) throw domain_error("composite density needs t > 0");
        const double s1 = m1_.survival(t);
        const double s2 = m2_.survival(t);
        return copula_.partial_u(s1, s2) * m1_.hazard(t) * s1 + copula_.partial_v(s1, s2) * m2_.hazard(t) * s2;
    }

    double hazard(double t) const {
        if (!(t > 0.0 && std::isfinite(t))) throw domain_error("composite hazard needs t > 0");
        const double s1 = m1_.survival(t);
        const double s2 = m2_.survival(t);
        const double c = copula_.value(s1, s2);
        if (c <= 0.0) throw numeric_error("composite survival underflows at t = " + numeric::format_double(t));
        // Rates of each component among subjects still free of both events.
        const double w1 = copula_.partial_u(s1, s2) * s1 / c;
        const double w2 = copula_.partial_v(s1, s2) * s2 / c;
        return w1 * m1_.hazard(t) + w2 * m2_.hazard(t);
    }

    /// Cause-specific hazard of the non-fatal component, P(T2 in dt, T1 > t) / S*(t) dt.
    double cause_specific_hazard2(double t) const {
        const double s1 = m1_.survival(t);
        const double s2 = m2_.survival(t);
        return copula_.partial_v(s1, s2) * s2 * m2_.hazard(t) / copula_.value(s1, s2);
    }

    double cause_specific_hazard1(double t) const {
        const double s1 = m1_.survival(t);
        const double s2 = m2_.survival(t);
        return copula_.partial_u(s1, s2) * s1 * m1_.hazard(t) / copula_.value(s1, s2);
    }

    /// P(T2 < tau, T2 < T1) = integral_0^tau f2(t) C_v(S1(t), S2(t)) dt.
    double observed_nonfatal_probability(double tau, double rel_tol = 1e-9) const {
        if (!(tau > 0.0 && std::isfinite(tau))) throw domain_error("tau must be positive");
        // Integrating over the cumulative hazard x = (t/b2)^shape2 turns f2 dt
        // into e^-x dx, which decays smoothly even when b2 is tiny. A second
        // change x = y^m with m = shape2 / min(shape1, shape2) makes both
        // cumulative hazards powers of y with exponent >= 1, removing the
        // fractional power of x that S1 would otherwise carry at the origin.
        const double m = m2_.shape() / std::min(m1_.shape(), m2_.shape());
        const double upper = std::pow(m2_.cumulative_hazard(tau), 1.0 / m);
        const double ratio = std::pow(m2_.scale() / m1_.scale(), m1_.shape());
        const double fatal_power = m1_.shape() / std::min(m1_.shape(), m2_.shape());
        auto integrand = [&, m](double y) {
            const double x = std::pow(y, m);
            const double s1 = std::exp(-ratio * std::pow(y, fatal_power));
            const double s2 = std::exp(-x);
            return copula_.partial_v(s1, s2) * s2 * m * std::pow(y, m - 1.0);
        };
        try {
            return numeric::integrate(integrand, 0.0, upper, rel_tol, 1e-15).value;
        } catch (const numeric_error& e) {
            throw numeric_error(std::string("observed non-fatal probability: ") + e.what() +
                                "; fatal (shape " + numeric::format_double(m1_.shape()) + ", scale " +
                                numeric::format_double(m1_.scale()) + "), non-fatal (shape " +
                                numeric::format_double(m2_.shape()) + ", scale " +
                                numeric::format_double(m2_.scale()) + ")");
        }
    }

    double event_probability(double tau) const { return 1.0 - survival(tau); }

    friend bool operator==(const JointGroupModel&, const JointGroupModel&) = default;

private:
    static void check_time(double t) {
        if (!(t >= 0.0 && std::isfinite(t))) throw domain_error("time must be finite and nonnegative");
    }

    WeibullMarginal m1_;
    WeibullMarginal m2_;
    FrankCopula copula_;
};

inline double composite_survival(const JointGroupModel& m, double t) { return m.survival(t); }
inline double composite_hazard(const JointGroupModel& m, double t) { return m.hazard(t); }
inline double observed_nonfatal_probability(const JointGroupModel& m, double tau, double rel_tol = 1e-9) {
    return m.observed_nonfatal_probability(tau, rel_tol);
}
inline double composite_event_probability(const JointGroupModel& m, double tau) {
    return m.event_probability(tau);
}

/// Scale of the control-arm non-fatal marginal that reproduces the observed
/// probability endpoint2.p0 = P(T2 < tau, T2 < T1). The search runs over the
/// marginal probability q = P(T2 <= tau) in (0, max_marginal_probability],
/// on which the observed probability is increasing; b2 follows from q.
inline double calibrate_nonfatal_scale(const ScenarioSpec& spec) {
    spec.validate();
    const double tau = spec.tau;
    const WeibullMarginal fatal(spec.endpoint1.shape, calibrate_fatal_scale(spec.endpoint1.shape, spec.endpoint1.p0, tau));
    const FrankCopula copula = copula_from_rho(spec.rho);
    const double beta2 = spec.endpoint2.shape;
    const double target = spec.endpoint2.p0;
    const double rel_tol = spec.numeric.quadrature_rel_tol;

    auto observed = [&](double q) {
        const JointGroupModel m(fatal, WeibullMarginal(beta2, calibrate_fatal_scale(beta2, q, tau)), copula);
        return m.observed_nonfatal_probability(tau, rel_tol);
    };

    const double q_max = spec.numeric.max_marginal_probability;
    const double sup = observed(q_max);
    if (sup < target) {
        throw infeasible_error("non-fatal probability " + numeric::format_double(target, 6) +
                                   " is not achievable; the achievable supremum is " +
                                   numeric::format_double(sup, 9) + " (fatal p0 " +
                                   numeric::format_double(spec.endpoint1.p0, 6) + ", rho " +
                                   numeric::format_double(spec.rho, 6) + ")",
                               target, sup);
    }
    const double q = numeric::find_root([&](double x) { return observed(x) - target; }, 0.0, q_max, -target,
                                        sup - target, 1e-14);
    return calibrate_fatal_scale(beta2, q, tau);
}

struct ScenarioModels {
    JointGroupModel control;
    JointGroupModel treatment;
};

inline ScenarioModels build_scenario_models(const ScenarioSpec& spec) {
    spec.validate();
    const double b1 = calibrate_fatal_scale(spec.endpoint1.shape, spec.endpoint1.p0, spec.tau);
    const double b2 = calibrate_nonfatal_scale(spec);
    const FrankCopula copula = copula_from_rho(spec.rho);
    const WeibullMarginal m1(spec.endpoint1.shape, b1);
    const WeibullMarginal m2(spec.endpoint2.shape, b2);
    // Spearman's rho is invariant under the monotone marginal transforms, so
    // sharing the copula keeps rho equal across arms.
    return {JointGroupModel(m1, m2, copula),
            JointGroupModel(proportional_marginal(m1, spec.endpoint1.hr), proportional_marginal(m2, spec.endpoint2.hr),
                            copula)};
}

/// lim_{t -> 0+} HR*(t). Near the origin S1, S2 -> 1 and both copula partials
/// tend to 1, so the composite hazard is lambda1 + lambda2 in each arm and the
/// component with the smaller shape dominates.
inline double hr_limit_at_zero(const ScenarioSpec& spec, const ScenarioModels& models) {
    const double beta1 = spec.endpoint1.shape;
    const double beta2 = spec.endpoint2.shape;
    if (beta1 < beta2) return spec.endpoint1.hr;
    if (beta2 < beta1) return spec.endpoint2.hr;
    // Equal shapes: lambda1 / lambda2 = (b2 / b1)^shape for all t.
    const double w = std::pow(models.control.marginal2().scale() / models.control.marginal1().scale(), beta1);
    return (spec.endpoint1.hr * w + spec.endpoint2.hr) / (w + 1.0);
}

/// HR*(t) and the composite survival/hazard of both arms on a geometric grid
/// over [epsilon * tau, tau].
struct HrCurve {
    double tau = 1.0;
    std::vector<double> times;
    std::vector<double> hr_star;
    std::vector<double> s_star_0;
    std::vector<double> s_star_1;
    std::vector<double> hazard_0;
    std::vector<double> hazard_1;
    double hr_limit_at_zero = 1.0;
    ScenarioModels models;

    double hr_at(double t) const { return models.treatment.hazard(t) / models.control.hazard(t); }
    std::size_t size() const noexcept { return times.size(); }
};

inline std::vector<double> geometric_grid(double first, double last, int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    const double log_ratio = std::log(last / first);
    for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = first * std::exp(log_ratio * i / (n - 1));
    t.front() = first;
    t.back() = last;
    return t;
}

inline HrCurve hr_curve(const ScenarioSpec& spec, const ScenarioModels& models) {
    spec.validate();
    HrCurve c{spec.tau, geometric_grid(spec.numeric.epsilon * spec.tau, spec.tau, spec.numeric.grid_points),
              {}, {}, {}, {}, {}, hr_limit_at_zero(spec, models), models};
    const std::size_t n = c.times.size();
    c.hr_star.resize(n);
    c.s_star_0.resize(n);
    c.s_star_1.resize(n);
    c.hazard_0.resize(n);
    c.hazard_1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = c.times[i];
        c.s_star_0[i] = models.control.survival(t);
        c.s_star_1[i] = models.treatment.survival(t);
        c.hazard_0[i] = models.control.hazard(t);
        c.hazard_1[i] = models.treatment.hazard(t);
        c.hr_star[i] = c.hazard_1[i] / c.hazard_0[i];
        if (!(std::isfinite(c.hr_star[i]) && c.hr_star[i] > 0.0)) {
            throw numeric_error("HR*(t) is not finite and positive at t = " + numeric::format_double(t));
        }
    }
    return c;
}

inline HrCurve hr_curve(const ScenarioSpec& spec) { return hr_curve(spec, build_scenario_models(spec)); }

}  // namespace cehr
