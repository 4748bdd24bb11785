#pragma once

#include "cehr/errors.hpp"
#include "cehr/numeric.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace cehr {

/// Frank copula with positive association parameter theta, or the product
/// (independence) copula. Independence is a distinct state rather than a
/// tiny theta so that trivial cases stay exact.
///
/// Writing d = e^-theta - 1, a = e^(-theta u) - 1, b = e^(-theta v) - 1,
///
///   C(u,v) = -(1/theta) log1p(a b / d) = -(1/theta) log((d + a b) / d)
///   -(d + a b) = e^(-theta u) (1 - e^(-theta v)) + e^(-theta v) (1 - e^(-theta (1-v)))
///
/// Both terms of the last line are nonnegative, so the log-space form has no
/// cancellation when a b / d approaches -1 (strong dependence, u and v near
/// 1); the log1p form is used elsewhere, including small theta.
class FrankCopula {
public:
    static FrankCopula independence() { return FrankCopula(); }

    static FrankCopula from_theta(double theta) {
        if (!(std::isfinite(theta) && theta > 0.0)) {
            throw domain_error("Frank theta must be positive and finite (only positive association), got " +
                               std::to_string(theta));
        }
        return FrankCopula(theta);
    }

    bool is_independence() const noexcept { return independent_; }
    /// 0 under independence.
    double theta() const noexcept { return theta_; }

    double value(double u, double v) const {
        check_unit(u, "u");
        check_unit(v, "v");
        if (independent_) return u * v;
        // x = a b / d lies in (-1, 0]. Away from -1, log1p is accurate and also
        // covers small theta, where the log-space difference would cancel.
        const double x = std::expm1(-theta_ * u) * std::expm1(-theta_ * v) / d_;
        const double out = x > -0.5 ? -std::log1p(x) / theta_ : -(log_neg_num(u, v) - log_neg_d_) / theta_;
        return clamp_unit(out);
    }

    /// dC/du at (u, v).
    double partial_u(double u, double v) const {
        check_unit(u, "u");
        check_unit(v, "v");
        if (independent_) return v;
        if (v == 0.0) return 0.0;
        const double log_b = std::log(-std::expm1(-theta_ * v));
        return clamp_unit(std::exp(-theta_ * u + log_b - log_neg_num(u, v)));
    }

    double partial_v(double u, double v) const { return partial_u(v, u); }

    /// Conditional inversion: the v with partial_u(u, v) = w.
    std::pair<double, double> sample_pair(double u, double w) const {
        if (!(u > 0.0 && u < 1.0 && w > 0.0 && w < 1.0)) {
            throw domain_error("sample_pair needs uniform draws in (0,1)");
        }
        if (independent_) return {u, w};
        const double d = std::expm1(-theta_);
        const double v = -std::log1p(w * d / (w + (1.0 - w) * std::exp(-theta_ * u))) / theta_;
        return {u, clamp_unit(v)};
    }

    friend bool operator==(const FrankCopula&, const FrankCopula&) = default;

private:
    FrankCopula() : independent_(true), theta_(0.0), d_(0.0), log_neg_d_(0.0) {}
    explicit FrankCopula(double theta)
        : independent_(false), theta_(theta), d_(std::expm1(-theta)), log_neg_d_(std::log(-d_)) {}

    // log(-(d + a b))
    double log_neg_num(double u, double v) const {
        const double t1 = -theta_ * u + std::log(-std::expm1(-theta_ * v));
        const double t2 = -theta_ * v + std::log(-std::expm1(-theta_ * (1.0 - v)));
        return numeric::log_add_exp(t1, t2);
    }

    static void check_unit(double x, const char* name) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw domain_error(std::string("copula argument ") + name + " must lie in [0,1], got " +
                               std::to_string(x));
        }
    }

    static double clamp_unit(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

    bool independent_;
    double theta_;
    double d_;
    double log_neg_d_;
};

inline double copula_value(const FrankCopula& c, double u, double v) { return c.value(u, v); }
inline double partial_u(const FrankCopula& c, double u, double v) { return c.partial_u(u, v); }
inline double partial_v(const FrankCopula& c, double u, double v) { return c.partial_v(u, v); }
inline std::pair<double, double> sample_pair(const FrankCopula& c, double u, double w) {
    return c.sample_pair(u, w);
}

namespace detail {

// t / (e^t - 1), equal to 1 at t = 0.
inline double bose_factor(double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); }

}  // namespace detail

/// Debye function D_k(x) = (k / x^k) * integral_0^x t^k / (e^t - 1) dt, k in {1, 2}.
inline double debye(int k, double x) {
    if (k != 1 && k != 2) throw domain_error("debye order must be 1 or 2");
    if (!(x > 0.0 && std::isfinite(x))) throw domain_error("debye argument must be positive");
    // Scaling t = x s keeps the integrand O(1) for every x.
    auto integrand = [k, x](double s) {
        return (k == 1 ? 1.0 : s) * detail::bose_factor(x * s);
    };
    return k * numeric::integrate(integrand, 0.0, 1.0, 1e-12, 1e-15).value;
}

/// Spearman's rho of the Frank copula, 1 - (12/theta) (D_1(theta) - D_2(theta)).
/// D_1 - D_2 is integrated as one term to avoid cancellation at small theta.
inline double spearman_rho(double theta) {
    if (!(theta > 0.0 && std::isfinite(theta))) throw domain_error("theta must be positive");
    auto integrand = [theta](double s) { return detail::bose_factor(theta * s) * (1.0 - 2.0 * s); };
    // integral_0^1 (1 - 2s) t/(e^t-1) ds with t = theta s equals D_1 - D_2.
    const double diff = numeric::integrate(integrand, 0.0, 1.0, 1e-13, 1e-17).value;
    return 1.0 - 12.0 / theta * diff;
}

inline double spearman_rho(const FrankCopula& c) {
    return c.is_independence() ? 0.0 : spearman_rho(c.theta());
}

/// Frank theta whose Spearman's rho equals `rho`, rho in (0, 0.95].
inline double theta_from_rho(double rho) {
    if (!(rho > 0.0 && rho <= 0.95)) {
        throw domain_error("Spearman rho must lie in (0, 0.95], got " + std::to_string(rho));
    }
    constexpr double lo = 1e-6;
    constexpr double hi = 100.0;
    const double f_lo = spearman_rho(lo) - rho;
    // rho(theta) ~ theta / 6 below the bracket
    if (f_lo >= 0.0) return 6.0 * rho;
    return numeric::find_root([rho](double th) { return spearman_rho(th) - rho; }, lo, hi, f_lo,
                              spearman_rho(hi) - rho, 1e-13);
}

/// Copula with the given Spearman's rho; rho = 0 gives independence.
inline FrankCopula copula_from_rho(double rho) {
    if (rho == 0.0) return FrankCopula::independence();
    return FrankCopula::from_theta(theta_from_rho(rho));
}

}  // namespace cehr
