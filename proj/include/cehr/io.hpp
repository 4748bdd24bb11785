#pragma once

// JSON schemas shared by the HTTP service and the CLI.
//
// Scenario request:
//   {"tau":1.0,"rho":0.5,
//    "endpoint1":{"p0":0.59,"hr":0.91,"shape":1.0,"fatal":true},
//    "endpoint2":{"p0":0.74,"hr":0.77,"shape":1.0,"fatal":false},
//    "alpha":0.05,"power":0.8,"threshold":1.25,
//    "numeric":{"grid_points":2000,"epsilon":1e-4,"ahr_weighting":"density"}}

#include "cehr/composite.hpp"
#include "cehr/errors.hpp"
#include "cehr/measures.hpp"
#include "cehr/sweep.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cehr::io {

using json = nlohmann::ordered_json;

struct EvaluateRequest {
    ScenarioSpec scenario;
    DesignParameters design;
    /// Transport cap for the curve arrays; summaries use the full grid.
    int curve_points = 500;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw invalid_input(path, "expected a JSON object");
    return j;
}

inline double number(const json& obj, const std::string& key, const std::string& path, std::optional<double> fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (fallback) return *fallback;
        throw invalid_input(join(path, key), "required field is missing");
    }
    if (!it->is_number()) throw invalid_input(join(path, key), "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw invalid_input(join(path, key), "must be finite");
    return v;
}

inline bool boolean(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_boolean()) throw invalid_input(join(path, key), "expected true or false");
    return it->get<bool>();
}

inline int integer(const json& obj, const std::string& key, const std::string& path, int fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_number_integer()) throw invalid_input(join(path, key), "expected an integer");
    return it->get<int>();
}

inline std::vector<double> number_list(const json& obj, const std::string& key, const std::string& path,
                                       std::vector<double> fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_array()) throw invalid_input(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& v = (*it)[i];
        if (!v.is_number()) throw invalid_input(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v.get<double>());
    }
    if (out.empty()) throw invalid_input(join(path, key), "value list must not be empty");
    return out;
}

inline AhrWeighting parse_weighting(const std::string& s, const std::string& path) {
    if (s == "density") return AhrWeighting::density;
    if (s == "uniform") return AhrWeighting::uniform;
    throw invalid_input(path, "expected \"density\" or \"uniform\"");
}

inline NumericConfig parse_numeric(const json& root, const std::string& path) {
    NumericConfig n;
    const auto it = root.find("numeric");
    if (it == root.end() || it->is_null()) return n;
    const std::string p = join(path, "numeric");
    const json& obj = require_object(*it, p);
    n.grid_points = integer(obj, "grid_points", p, n.grid_points);
    n.epsilon = number(obj, "epsilon", p, n.epsilon);
    if (const auto w = obj.find("ahr_weighting"); w != obj.end() && !w->is_null()) {
        if (!w->is_string()) throw invalid_input(join(p, "ahr_weighting"), "expected a string");
        n.ahr_weighting = parse_weighting(w->get<std::string>(), join(p, "ahr_weighting"));
    }
    n.quadrature_rel_tol = number(obj, "quadrature_rel_tol", p, n.quadrature_rel_tol);
    n.max_marginal_probability = number(obj, "max_marginal_probability", p, n.max_marginal_probability);
    n.extreme_tol = number(obj, "extreme_tol", p, n.extreme_tol);
    return n;
}

inline DesignParameters parse_design(const json& obj, const std::string& path) {
    DesignParameters d;
    d.alpha = number(obj, "alpha", path, d.alpha);
    d.power = number(obj, "power", path, d.power);
    d.threshold = number(obj, "threshold", path, d.threshold);
    return d;
}

inline EndpointSpec parse_endpoint(const json& root, const std::string& key, bool default_fatal) {
    const auto it = root.find(key);
    if (it == root.end() || it->is_null()) throw invalid_input(key, "required object is missing");
    const json& obj = require_object(*it, key);
    EndpointSpec e;
    e.p0 = number(obj, "p0", key, std::nullopt);
    e.hr = number(obj, "hr", key, std::nullopt);
    e.shape = number(obj, "shape", key, 1.0);
    e.fatal = boolean(obj, "fatal", key, default_fatal);
    return e;
}

inline json to_json(const NumericConfig& n) {
    return {{"grid_points", n.grid_points},
            {"epsilon", n.epsilon},
            {"ahr_weighting", to_string(n.ahr_weighting)},
            {"quadrature_rel_tol", n.quadrature_rel_tol},
            {"max_marginal_probability", n.max_marginal_probability},
            {"extreme_tol", n.extreme_tol}};
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
inline json optional_count(const std::optional<long long>& v) { return v ? json(*v) : json(nullptr); }
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

/// Parses and validates a scenario request. When only endpoint2 is marked
/// fatal the endpoints are swapped so that endpoint1 is always the fatal one.
inline EvaluateRequest parse_evaluate_request(const json& root) {
    detail::require_object(root, "");
    EvaluateRequest req;
    ScenarioSpec& s = req.scenario;
    s.endpoint1 = detail::parse_endpoint(root, "endpoint1", true);
    s.endpoint2 = detail::parse_endpoint(root, "endpoint2", false);
    if (s.endpoint1.fatal == s.endpoint2.fatal) {
        throw invalid_input("endpoint1.fatal", "exactly one endpoint must be fatal");
    }
    if (s.endpoint2.fatal) std::swap(s.endpoint1, s.endpoint2);
    s.rho = detail::number(root, "rho", "", 0.0);
    s.tau = detail::number(root, "tau", "", 1.0);
    s.numeric = detail::parse_numeric(root, "");
    req.design = detail::parse_design(root, "");
    req.curve_points = detail::integer(root, "curve_points", "", req.curve_points);
    if (req.curve_points < 2) throw invalid_input("curve_points", "must be at least 2");
    s.validate();
    req.design.validate();
    return req;
}

inline EvaluateRequest parse_evaluate_request(const std::string& body) {
    json root;
    try {
        root = json::parse(body);
    } catch (const json::parse_error& e) {
        throw invalid_input("", std::string("malformed JSON: ") + e.what());
    }
    return parse_evaluate_request(root);
}

inline GridSpec parse_grid(const json& root) {
    detail::require_object(root, "");
    GridSpec g;
    g.p_values = detail::number_list(root, "p_values", "", g.p_values);
    g.hr_values = detail::number_list(root, "hr_values", "", g.hr_values);
    g.rho_values = detail::number_list(root, "rho_values", "", g.rho_values);
    g.shape_values = detail::number_list(root, "shape_values", "", g.shape_values);
    g.tau = detail::number(root, "tau", "", g.tau);
    g.design = detail::parse_design(root, "");
    g.numeric = detail::parse_numeric(root, "");
    g.validate();
    // Every combination must be a valid scenario.
    for (double p : g.p_values)
        if (!(p > 0.0 && p < 1.0)) throw invalid_input("p_values", "probabilities must lie in (0,1)");
    for (double h : g.hr_values)
        if (!(h > 0.0 && h <= 1.0)) throw invalid_input("hr_values", "hazard ratios must lie in (0,1]");
    for (double r : g.rho_values)
        if (!(r >= 0.0 && r <= 0.95)) throw invalid_input("rho_values", "correlations must lie in [0, 0.95]");
    for (double b : g.shape_values)
        if (!(b > 0.0)) throw invalid_input("shape_values", "shapes must be positive");
    return g;
}

inline GridSpec parse_grid(const std::string& body) {
    json root;
    try {
        root = json::parse(body);
    } catch (const json::parse_error& e) {
        throw invalid_input("", std::string("malformed JSON: ") + e.what());
    }
    return parse_grid(root);
}

inline json to_json(const ScenarioSpec& s, const DesignParameters& d) {
    auto endpoint = [](const EndpointSpec& e) {
        return json{{"p0", e.p0}, {"hr", e.hr}, {"shape", e.shape}, {"fatal", e.fatal}};
    };
    return {{"tau", s.tau},
            {"rho", s.rho},
            {"endpoint1", endpoint(s.endpoint1)},
            {"endpoint2", endpoint(s.endpoint2)},
            {"alpha", d.alpha},
            {"power", d.power},
            {"threshold", d.threshold},
            {"numeric", detail::to_json(s.numeric)}};
}

inline json to_json(const NphSummary& s) {
    using detail::optional_count;
    return {{"m_hr", s.m_hr},
            {"M_hr", s.M_hr},
            {"a_hr", s.a_hr},
            {"a_hr_density", s.a_hr_density},
            {"a_hr_uniform", s.a_hr_uniform},
            {"ahr_weighting", to_string(s.weighting)},
            {"D", s.d},
            {"R", detail::optional_number(s.r)},
            {"p_star_control", s.p_star_control},
            {"p_star_treatment", s.p_star_treatment},
            {"events_a", optional_count(s.events_a)},
            {"events_M", optional_count(s.events_M)},
            {"n_a", optional_count(s.n_a)},
            {"n_M", optional_count(s.n_M)},
            {"nph_flag", s.nph_flag},
            {"threshold", s.threshold},
            {"hr_limit_at_zero", s.hr_limit_at_zero},
            {"t_at_min", s.t_at_min},
            {"t_at_max", s.t_at_max}};
}

/// Evenly spaced indices into [0, n), always keeping the first and last.
inline std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (n <= max_points) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(max_points);
    for (std::size_t k = 0; k < max_points; ++k) {
        idx.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n - 1) /
                                                            static_cast<double>(max_points - 1))));
    }
    return idx;
}

inline json curve_to_json(const HrCurve& c, std::size_t max_points) {
    json times = json::array(), hr = json::array(), s0 = json::array(), s1 = json::array();
    for (std::size_t i : downsample_indices(c.size(), max_points)) {
        times.push_back(c.times[i]);
        hr.push_back(c.hr_star[i]);
        s0.push_back(c.s_star_0[i]);
        s1.push_back(c.s_star_1[i]);
    }
    return {{"times", times}, {"hr_star", hr}, {"s_star_control", s0}, {"s_star_treatment", s1}};
}

inline json model_to_json(const ScenarioModels& m, double tau, double rel_tol) {
    auto marginal = [](const WeibullMarginal& w) { return json{{"shape", w.shape()}, {"scale", w.scale()}}; };
    auto group = [&](const JointGroupModel& g) {
        return json{{"fatal", marginal(g.marginal1())},
                    {"nonfatal", marginal(g.marginal2())},
                    {"observed_nonfatal_probability", g.observed_nonfatal_probability(tau, rel_tol)},
                    {"fatal_probability", g.marginal1().cdf(tau)},
                    {"composite_event_probability", g.event_probability(tau)}};
    };
    const auto& cop = m.control.copula();
    return {{"theta", cop.is_independence() ? json(nullptr) : json(cop.theta())},
            {"independence", cop.is_independence()},
            {"control", group(m.control)},
            {"treatment", group(m.treatment)}};
}

/// Treatment/control ratio of each component's cause-specific hazard over the
/// grid. Equals the input HR only under independence.
inline json cause_specific_diagnostics(const HrCurve& c) {
    double lo1 = INFINITY, hi1 = -INFINITY, lo2 = INFINITY, hi2 = -INFINITY;
    for (double t : c.times) {
        const double r1 = c.models.treatment.cause_specific_hazard1(t) / c.models.control.cause_specific_hazard1(t);
        const double r2 = c.models.treatment.cause_specific_hazard2(t) / c.models.control.cause_specific_hazard2(t);
        if (std::isfinite(r1)) {
            lo1 = std::min(lo1, r1);
            hi1 = std::max(hi1, r1);
        }
        if (std::isfinite(r2)) {
            lo2 = std::min(lo2, r2);
            hi2 = std::max(hi2, r2);
        }
    }
    return {{"fatal", {{"min", detail::finite_or_null(lo1)}, {"max", detail::finite_or_null(hi1)}}},
            {"nonfatal", {{"min", detail::finite_or_null(lo2)}, {"max", detail::finite_or_null(hi2)}}}};
}

struct Evaluation {
    HrCurve curve;
    NphSummary summary;
};

inline Evaluation evaluate(const EvaluateRequest& req) {
    HrCurve curve = hr_curve(req.scenario);
    NphSummary summary =
        summarize(curve, req.design, req.scenario.numeric.ahr_weighting, req.scenario.numeric.extreme_tol);
    return {std::move(curve), summary};
}

inline json evaluate_response(const EvaluateRequest& req, const Evaluation& ev) {
    return {{"scenario", to_json(req.scenario, req.design)},
            {"summary", to_json(ev.summary)},
            {"curve", curve_to_json(ev.curve, static_cast<std::size_t>(req.curve_points))},
            {"curve_points_full", ev.curve.size()},
            {"model", model_to_json(ev.curve.models, req.scenario.tau, req.scenario.numeric.quadrature_rel_tol)},
            {"cause_specific_hr", cause_specific_diagnostics(ev.curve)}};
}

inline json row_to_json(const SweepRow& r) {
    using detail::finite_or_null;
    const auto& s = r.scenario;
    const bool ok = r.status == RowStatus::ok;
    json j{{"p1", s.endpoint1.p0},
           {"p2", s.endpoint2.p0},
           {"hr1", s.endpoint1.hr},
           {"hr2", s.endpoint2.hr},
           {"rho", s.rho},
           {"beta1", s.endpoint1.shape},
           {"beta2", s.endpoint2.shape},
           {"m_hr", finite_or_null(r.m_hr)},
           {"M_hr", finite_or_null(r.M_hr)},
           {"a_hr_density", finite_or_null(r.a_hr_density)},
           {"a_hr_uniform", finite_or_null(r.a_hr_uniform)},
           {"D", finite_or_null(r.d)},
           {"R_density", finite_or_null(r.r_density)},
           {"R_uniform", finite_or_null(r.r_uniform)},
           {"p_star_control", finite_or_null(r.p_star_control)},
           {"p_star_treatment", finite_or_null(r.p_star_treatment)},
           {"n_a", ok && r.n_a > 0 ? json(r.n_a) : json(nullptr)},
           {"n_M", ok && r.n_M > 0 ? json(r.n_M) : json(nullptr)},
           {"nph_flag", ok ? json(r.nph_flag) : json(nullptr)},
           {"status", to_string(r.status)}};
    if (!ok) j["message"] = r.message;
    return j;
}

inline json levels_to_json(const std::vector<FactorLevel>& levels) {
    json out = json::array();
    for (const auto& l : levels) {
        out.push_back({{"level", l.label}, {"count", l.count}, {"min", l.min}, {"median", l.median}, {"max", l.max}});
    }
    return out;
}

/// Table-style summaries for both aHR weightings.
inline json sweep_summaries(const std::vector<SweepRow>& rows) {
    json out = json::object();
    if (count_status(rows, RowStatus::ok) == 0) return out;
    for (auto w : {AhrWeighting::density, AhrWeighting::uniform}) {
        json per = json::object();
        for (auto f : {Factor::global, Factor::hr_diff, Factor::shape_pattern, Factor::rho}) {
            per[to_string(f)] = levels_to_json(summarize_by_factor(rows, f, w));
        }
        out[to_string(w)] = per;
    }
    return out;
}

}  // namespace cehr::io
