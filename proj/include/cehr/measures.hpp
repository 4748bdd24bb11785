#pragma once

#include "cehr/composite.hpp"
#include "cehr/errors.hpp"
#include "cehr/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace cehr {

struct HrExtremes {
    double m_hr;
    double M_hr;
    /// Location of each extreme; 0 when the t -> 0 limit attains it.
    double t_min;
    double t_max;
};

namespace detail {

template <bool Max>
numeric::extremum refine_extreme(const HrCurve& curve, std::size_t i, double x_tol) {
    const auto& t = curve.times;
    const auto& hr = curve.hr_star;
    numeric::extremum best{t[i], hr[i]};
    if (i == 0 || i + 1 >= t.size()) return best;
    auto f = [&](double x) { return curve.hr_at(x); };
    const auto r = Max ? numeric::golden_section_max(f, t[i - 1], t[i + 1], x_tol)
                       : numeric::golden_section_min(f, t[i - 1], t[i + 1], x_tol);
    if (Max ? r.value > best.value : r.value < best.value) best = r;
    return best;
}

}  // namespace detail

/// Global min and max of HR*(t) over (0, tau]: grid scan, golden-section
/// refinement around the grid extremes, and the analytic t -> 0 limit.
inline HrExtremes extremes(const HrCurve& curve, double x_tol = 1e-8) {
    if (curve.size() == 0) throw domain_error("extremes of an empty curve");
    const auto& hr = curve.hr_star;
    const auto [lo, hi] = std::minmax_element(hr.begin(), hr.end());
    const double tol = x_tol * curve.tau;
    auto mn = detail::refine_extreme<false>(curve, static_cast<std::size_t>(lo - hr.begin()), tol);
    auto mx = detail::refine_extreme<true>(curve, static_cast<std::size_t>(hi - hr.begin()), tol);
    HrExtremes e{mn.value, mx.value, mn.x, mx.x};
    if (curve.hr_limit_at_zero < e.m_hr) {
        e.m_hr = curve.hr_limit_at_zero;
        e.t_min = 0.0;
    }
    if (curve.hr_limit_at_zero > e.M_hr) {
        e.M_hr = curve.hr_limit_at_zero;
        e.t_max = 0.0;
    }
    return e;
}

/// Average of HR*(t) over [0, tau]. `density` weights by the control-arm
/// composite event density (trapezoids in F*(t) = 1 - S*(t)); `uniform`
/// weights time uniformly. The segment [0, t_0] uses the t -> 0 limit.
inline double average_hr(const HrCurve& curve, AhrWeighting weighting = AhrWeighting::density) {
    if (curve.size() == 0) throw domain_error("average of an empty curve");
    const auto& t = curve.times;
    const auto& hr = curve.hr_star;
    const std::size_t n = t.size();
    if (weighting == AhrWeighting::density) {
        const auto& s = curve.s_star_0;
        double num = 0.5 * (curve.hr_limit_at_zero + hr[0]) * (1.0 - s[0]);
        double den = 1.0 - s[0];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double mass = s[i] - s[i + 1];
            num += 0.5 * (hr[i] + hr[i + 1]) * mass;
            den += mass;
        }
        return num / den;
    }
    double num = 0.5 * (curve.hr_limit_at_zero + hr[0]) * t[0];
    for (std::size_t i = 0; i + 1 < n; ++i) num += 0.5 * (hr[i] + hr[i + 1]) * (t[i + 1] - t[i]);
    return num / t[n - 1];
}

inline double d_measure(double m_hr, double M_hr) {
    if (m_hr > M_hr) throw domain_error("D needs mHR <= MHR");
    return M_hr - m_hr;
}

/// (log aHR / log MHR)^2, the ratio n_MHR / n_aHR.
inline double r_measure(double a_hr, double M_hr) {
    if (!(M_hr < 1.0)) throw domain_error("R is undefined when MHR >= 1 (no minimum detectable effect)");
    if (!(a_hr > 0.0 && a_hr <= M_hr * (1.0 + 1e-12))) throw domain_error("R needs 0 < aHR <= MHR");
    const double q = std::log(a_hr) / std::log(M_hr);
    return q * q;
}

/// Unrounded Schoenfeld count 4 (z_alpha + z_beta)^2 / (log h)^2 for a
/// one-sided level alpha.
inline double events_required_exact(double h, double alpha, double power) {
    if (!(h > 0.0 && h < 1.0)) throw domain_error("effect size h must lie in (0,1)");
    if (!(alpha > 0.0 && alpha < 0.5)) throw domain_error("alpha must lie in (0, 0.5)");
    if (!(power > 0.5 && power < 1.0)) throw domain_error("power must lie in (0.5, 1)");
    const double z = numeric::upper_normal_quantile(alpha) + numeric::upper_normal_quantile(1.0 - power);
    const double lh = std::log(h);
    return 4.0 * z * z / (lh * lh);
}

inline long long events_required(double h, double alpha, double power) {
    return static_cast<long long>(std::ceil(events_required_exact(h, alpha, power)));
}

inline double sample_size_exact(double h, double alpha, double power, double p_control, double p_treatment) {
    if (!(p_control > 0.0 && p_control <= 1.0)) throw domain_error("control event probability must lie in (0,1]");
    if (!(p_treatment > 0.0 && p_treatment <= 1.0)) throw domain_error("treatment event probability must lie in (0,1]");
    return 2.0 * events_required_exact(h, alpha, power) / (p_control + p_treatment);
}

inline long long sample_size(double h, double alpha, double power, double p_control, double p_treatment) {
    return static_cast<long long>(std::ceil(sample_size_exact(h, alpha, power, p_control, p_treatment)));
}

struct DesignParameters {
    double alpha = 0.05;
    double power = 0.8;
    double threshold = 1.25;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 0.5)) throw invalid_input("alpha", "must lie in (0, 0.5)");
        if (!(power > 0.5 && power < 1.0)) throw invalid_input("power", "must lie in (0.5, 1)");
        if (!(threshold > 0.0)) throw invalid_input("threshold", "must be positive");
    }
};

struct NphSummary {
    double m_hr = 1.0;
    double M_hr = 1.0;
    /// Average under the selected weighting, with both variants alongside.
    double a_hr = 1.0;
    double a_hr_density = 1.0;
    double a_hr_uniform = 1.0;
    AhrWeighting weighting = AhrWeighting::density;
    double d = 0.0;
    /// Empty when MHR >= 1.
    std::optional<double> r;
    double p_star_control = 0.0;
    double p_star_treatment = 0.0;
    std::optional<long long> events_a;
    std::optional<long long> events_M;
    std::optional<long long> n_a;
    std::optional<long long> n_M;
    bool nph_flag = false;
    double threshold = 1.25;
    double hr_limit_at_zero = 1.0;
    double t_at_min = 0.0;
    double t_at_max = 0.0;
};

inline NphSummary summarize(const HrCurve& curve, const DesignParameters& design,
                            AhrWeighting weighting = AhrWeighting::density, double extreme_tol = 1e-8) {
    design.validate();
    NphSummary s;
    const HrExtremes e = extremes(curve, extreme_tol);
    s.m_hr = e.m_hr;
    s.M_hr = e.M_hr;
    s.t_at_min = e.t_min;
    s.t_at_max = e.t_max;
    s.a_hr_density = average_hr(curve, AhrWeighting::density);
    s.a_hr_uniform = average_hr(curve, AhrWeighting::uniform);
    s.weighting = weighting;
    s.a_hr = weighting == AhrWeighting::density ? s.a_hr_density : s.a_hr_uniform;
    s.d = d_measure(s.m_hr, s.M_hr);
    s.threshold = design.threshold;
    s.hr_limit_at_zero = curve.hr_limit_at_zero;
    s.p_star_control = curve.models.control.event_probability(curve.tau);
    s.p_star_treatment = curve.models.treatment.event_probability(curve.tau);
    auto sizes = [&](double h, std::optional<long long>& events, std::optional<long long>& n) {
        if (!(h < 1.0)) return;
        events = events_required(h, design.alpha, design.power);
        n = sample_size(h, design.alpha, design.power, s.p_star_control, s.p_star_treatment);
    };
    sizes(s.a_hr, s.events_a, s.n_a);
    sizes(s.M_hr, s.events_M, s.n_M);
    if (s.M_hr < 1.0) s.r = r_measure(std::min(s.a_hr, s.M_hr), s.M_hr);
    s.nph_flag = s.r.has_value() && *s.r > design.threshold;
    return s;
}

}  // namespace cehr
