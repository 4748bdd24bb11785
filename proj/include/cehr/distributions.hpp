#pragma once

#include "cehr/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cehr {

/// Weibull law with survival exp(-(t/scale)^shape).
class WeibullMarginal {
public:
    WeibullMarginal(double shape, double scale) : shape_(shape), scale_(scale) {
        if (!(std::isfinite(shape) && shape > 0.0)) {
            throw domain_error("Weibull shape must be positive and finite, got " + std::to_string(shape));
        }
        if (!(std::isfinite(scale) && scale > 0.0)) {
            throw domain_error("Weibull scale must be positive and finite, got " + std::to_string(scale));
        }
    }

    double shape() const noexcept { return shape_; }
    double scale() const noexcept { return scale_; }

    /// (t/scale)^shape
    double cumulative_hazard(double t) const {
        check_time(t);
        return std::pow(t / scale_, shape_);
    }

    double survival(double t) const { return std::exp(-cumulative_hazard(t)); }

    /// 1 - survival(t), accurate for small t.
    double cdf(double t) const { return -std::expm1(-cumulative_hazard(t)); }

    /// Returns +inf at t = 0 when shape < 1.
    double hazard(double t) const {
        check_time(t);
        if (t == 0.0) {
            if (shape_ < 1.0) return std::numeric_limits<double>::infinity();
            return shape_ == 1.0 ? 1.0 / scale_ : 0.0;
        }
        return (shape_ / scale_) * std::pow(t / scale_, shape_ - 1.0);
    }

    double density(double t) const {
        const double h = hazard(t);
        if (std::isinf(h)) return h;
        return h * survival(t);
    }

    /// Time at which survival equals s, s in (0, 1].
    double quantile_survival(double s) const {
        if (!(s > 0.0 && s <= 1.0)) throw domain_error("survival level must lie in (0,1]");
        return scale_ * std::pow(-std::log(s), 1.0 / shape_);
    }

    friend bool operator==(const WeibullMarginal&, const WeibullMarginal&) = default;

private:
    static void check_time(double t) {
        if (!std::isfinite(t)) throw domain_error("time must be finite");
        if (t < 0.0) throw domain_error("time must be nonnegative, got " + std::to_string(t));
    }

    double shape_;
    double scale_;
};

inline double survival(const WeibullMarginal& m, double t) { return m.survival(t); }
inline double hazard(const WeibullMarginal& m, double t) { return m.hazard(t); }

/// Scale b with 1 - S(tau) = p, i.e. b = tau / (-log(1-p))^(1/shape).
inline double calibrate_fatal_scale(double shape, double p, double tau) {
    if (!(p > 0.0 && p < 1.0)) throw domain_error("event probability must lie in (0,1), got " + std::to_string(p));
    if (!(tau > 0.0 && std::isfinite(tau))) throw domain_error("follow-up tau must be positive");
    if (!(shape > 0.0 && std::isfinite(shape))) throw domain_error("shape must be positive");
    return tau / std::pow(-std::log1p(-p), 1.0 / shape);
}

/// Treatment-arm law with S'(t) = S(t)^hr: same shape, scale * hr^(-1/shape).
inline WeibullMarginal proportional_marginal(const WeibullMarginal& m, double hr) {
    if (!(hr > 0.0 && hr <= 1.0)) throw domain_error("hazard ratio must lie in (0,1], got " + std::to_string(hr));
    if (hr == 1.0) return m;
    return WeibullMarginal(m.shape(), m.scale() * std::pow(hr, -1.0 / m.shape()));
}

}  // namespace cehr
