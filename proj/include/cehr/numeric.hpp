#pragma once

// Numerical building blocks shared by the model: adaptive quadrature,
// bracketed root finding, golden-section refinement and normal quantiles.
// Quadrature, root bracketing and the normal quantile are delegated to
// Boost.Math; the wrappers add convergence checks with diagnostics.

#include "cehr/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>

namespace cehr::numeric {

inline std::string format_double(double x, int precision = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

struct quadrature_result {
    double value;
    double error;
};

/// Adaptive 31-point Gauss-Kronrod on [a, b]. Throws numeric_error when the
/// estimated error exceeds max(rel_tol * |value|, abs_tol).
template <class F>
quadrature_result integrate(F&& f, double a, double b, double rel_tol,
                            double abs_tol = 0.0, unsigned max_depth = 20) {
    if (a == b) return {0.0, 0.0};
    double error = 0.0;
    double l1 = 0.0;
    double value = 0.0;
    try {
        value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, a, b, max_depth, rel_tol, &error, &l1);
    } catch (const std::exception& e) {
        throw numeric_error(std::string("quadrature failed on [") + format_double(a) + ", " +
                            format_double(b) + "]: " + e.what());
    }
    // Errors at the rounding level of the integrand's L1 norm count as converged.
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * l1;
    const double allowed = std::max({rel_tol * std::abs(value), abs_tol, roundoff});
    if (!std::isfinite(value) || error > allowed * 1.0001) {
        throw numeric_error("quadrature did not converge on [" + format_double(a) + ", " +
                            format_double(b) + "]: value " + format_double(value) +
                            ", error estimate " + format_double(error) + ", requested rel tol " +
                            format_double(rel_tol));
    }
    return {value, error};
}

/// Root of f on [lo, hi] given f(lo), f(hi) of opposite sign. Terminates once
/// the bracket is narrower than x_tol.
template <class F>
double find_root(F&& f, double lo, double hi, double f_lo, double f_hi, double x_tol,
                 std::uintmax_t max_iter = 200) {
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw numeric_error("root not bracketed on [" + format_double(lo) + ", " +
                            format_double(hi) + "]: f = " + format_double(f_lo) + ", " +
                            format_double(f_hi));
    }
    std::uintmax_t iters = max_iter;
    auto tol = [x_tol](double a, double b) { return std::abs(b - a) <= x_tol; };
    std::pair<double, double> r;
    try {
        r = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
    } catch (const std::exception& e) {
        throw numeric_error(std::string("root finding failed: ") + e.what());
    }
    if (iters >= max_iter) {
        throw numeric_error("root finding exhausted " + std::to_string(max_iter) +
                            " iterations; bracket [" + format_double(r.first) + ", " +
                            format_double(r.second) + "]");
    }
    return 0.5 * (r.first + r.second);
}

template <class F>
double find_root(F&& f, double lo, double hi, double x_tol, std::uintmax_t max_iter = 200) {
    return find_root(f, lo, hi, f(lo), f(hi), x_tol, max_iter);
}

struct extremum {
    double x;
    double value;
};

/// Golden-section search for the maximum of a unimodal f on [a, b].
template <class F>
extremum golden_section_max(F&& f, double a, double b, double x_tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (std::abs(b - a) > x_tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc > fd ? extremum{c, fc} : extremum{d, fd};
}

template <class F>
extremum golden_section_min(F&& f, double a, double b, double x_tol) {
    auto r = golden_section_max([&](double x) { return -f(x); }, a, b, x_tol);
    return {r.x, -r.value};
}

/// Upper-tail standard normal quantile: z such that P(Z > z) = p.
inline double upper_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw domain_error("normal quantile needs p in (0,1)");
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), p));
}

/// log(exp(a) + exp(b)) without overflow; either argument may be -inf.
inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (a == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace cehr::numeric
