#pragma once

// Scenario grid enumeration, parallel evaluation and R summaries by factor.

#include "cehr/composite.hpp"
#include "cehr/errors.hpp"
#include "cehr/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace cehr {

struct GridSpec {
    std::vector<double> p_values{0.1, 0.3, 0.5};
    std::vector<double> hr_values{0.6, 0.7, 0.8, 0.9};
    std::vector<double> rho_values{0.1, 0.3, 0.5};
    std::vector<double> shape_values{0.5, 1.0, 2.0};
    double tau = 1.0;
    DesignParameters design{};
    NumericConfig numeric{};

    /// |p|^2 |hr|^2 |rho| |shape|^2
    std::size_t scenario_count() const {
        return p_values.size() * p_values.size() * hr_values.size() * hr_values.size() * rho_values.size() *
               shape_values.size() * shape_values.size();
    }

    void validate() const {
        auto nonempty = [](const std::vector<double>& v, const char* name) {
            if (v.empty()) throw invalid_input(name, "value list must not be empty");
        };
        nonempty(p_values, "p_values");
        nonempty(hr_values, "hr_values");
        nonempty(rho_values, "rho_values");
        nonempty(shape_values, "shape_values");
        if (!(tau > 0.0 && std::isfinite(tau))) throw invalid_input("tau", "must be positive");
        design.validate();
        numeric.validate();
    }
};

/// Lexicographic in (p1, p2, hr1, hr2, rho, shape1, shape2).
inline std::vector<ScenarioSpec> enumerate_scenarios(const GridSpec& grid) {
    grid.validate();
    std::vector<ScenarioSpec> out;
    out.reserve(grid.scenario_count());
    for (double p1 : grid.p_values)
        for (double p2 : grid.p_values)
            for (double hr1 : grid.hr_values)
                for (double hr2 : grid.hr_values)
                    for (double rho : grid.rho_values)
                        for (double b1 : grid.shape_values)
                            for (double b2 : grid.shape_values) {
                                ScenarioSpec s;
                                s.endpoint1 = {p1, hr1, b1, true};
                                s.endpoint2 = {p2, hr2, b2, false};
                                s.rho = rho;
                                s.tau = grid.tau;
                                s.numeric = grid.numeric;
                                out.push_back(s);
                            }
    return out;
}

enum class RowStatus { ok, infeasible, failed };

inline const char* to_string(RowStatus s) {
    switch (s) {
        case RowStatus::ok: return "ok";
        case RowStatus::infeasible: return "infeasible";
        case RowStatus::failed: return "failed";
    }
    return "failed";
}

struct SweepRow {
    ScenarioSpec scenario;
    RowStatus status = RowStatus::ok;
    /// Failure reason for non-ok rows.
    std::string message;
    double m_hr = NAN;
    double M_hr = NAN;
    double a_hr_density = NAN;
    double a_hr_uniform = NAN;
    double d = NAN;
    double r_density = NAN;
    double r_uniform = NAN;
    double p_star_control = NAN;
    double p_star_treatment = NAN;
    long long n_a = 0;
    long long n_M = 0;
    bool nph_flag = false;

    double r(AhrWeighting w) const { return w == AhrWeighting::density ? r_density : r_uniform; }
};

inline SweepRow evaluate_row(const ScenarioSpec& spec, const DesignParameters& design) {
    SweepRow row;
    row.scenario = spec;
    try {
        const HrCurve curve = hr_curve(spec);
        const NphSummary s = summarize(curve, design, spec.numeric.ahr_weighting, spec.numeric.extreme_tol);
        row.m_hr = s.m_hr;
        row.M_hr = s.M_hr;
        row.a_hr_density = s.a_hr_density;
        row.a_hr_uniform = s.a_hr_uniform;
        row.d = s.d;
        if (s.M_hr < 1.0) {
            row.r_density = r_measure(std::min(s.a_hr_density, s.M_hr), s.M_hr);
            row.r_uniform = r_measure(std::min(s.a_hr_uniform, s.M_hr), s.M_hr);
        }
        row.p_star_control = s.p_star_control;
        row.p_star_treatment = s.p_star_treatment;
        row.n_a = s.n_a.value_or(0);
        row.n_M = s.n_M.value_or(0);
        row.nph_flag = s.nph_flag;
    } catch (const infeasible_error& e) {
        row.status = RowStatus::infeasible;
        row.message = e.what();
    } catch (const numeric_error& e) {
        row.status = RowStatus::failed;
        row.message = e.what();
    }
    return row;
}

/// CEHR_THREADS, else the number of logical cores.
inline unsigned default_thread_count() {
    if (const char* env = std::getenv("CEHR_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Evaluates the scenarios in parallel; rows come back in input order.
/// `on_row` (optional) is called after each completed row with the number
/// completed so far, from worker threads.
template <class Progress>
std::vector<SweepRow> run_scenarios(const std::vector<ScenarioSpec>& scenarios, const DesignParameters& design,
                                    unsigned threads, Progress&& on_row) {
    std::vector<SweepRow> rows(scenarios.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            rows[i] = evaluate_row(scenarios[i], design);
            on_row(++done);
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenarios.size())));
    if (threads == 1) {
        worker();
        return rows;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return rows;
}

inline std::vector<SweepRow> run_sweep(const GridSpec& grid, unsigned threads = default_thread_count()) {
    return run_scenarios(enumerate_scenarios(grid), grid.design, threads, [](std::size_t) {});
}

// ---------------------------------------------------------------------------
// CSV

inline const char* sweep_csv_header() {
    return "p1,p2,hr1,hr2,rho,beta1,beta2,m_hr,M_hr,a_hr_density,a_hr_uniform,D,R_density,R_uniform,"
           "p_star_control,p_star_treatment,n_a,n_M,nph_flag,status";
}

namespace detail {

inline std::string sig6(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace detail

inline std::string sweep_csv_line(const SweepRow& row) {
    using detail::sig6;
    const auto& s = row.scenario;
    std::string line;
    for (double v : {s.endpoint1.p0, s.endpoint2.p0, s.endpoint1.hr, s.endpoint2.hr, s.rho, s.endpoint1.shape,
                     s.endpoint2.shape, row.m_hr, row.M_hr, row.a_hr_density, row.a_hr_uniform, row.d,
                     row.r_density, row.r_uniform, row.p_star_control, row.p_star_treatment}) {
        line += sig6(v);
        line += ',';
    }
    const bool ok = row.status == RowStatus::ok;
    line += ok && row.n_a > 0 ? std::to_string(row.n_a) : "";
    line += ',';
    line += ok && row.n_M > 0 ? std::to_string(row.n_M) : "";
    line += ',';
    line += ok ? (row.nph_flag ? "1" : "0") : "";
    line += ',';
    line += to_string(row.status);
    return line;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << sweep_csv_header() << '\n';
    for (const auto& r : rows) out << sweep_csv_line(r) << '\n';
}

// ---------------------------------------------------------------------------
// Summaries

enum class Factor { hr_diff, shape_pattern, rho, global };

inline Factor parse_factor(const std::string& name) {
    if (name == "hr_diff" || name == "hr-diff") return Factor::hr_diff;
    if (name == "shape_pattern" || name == "shapes") return Factor::shape_pattern;
    if (name == "rho") return Factor::rho;
    if (name == "global") return Factor::global;
    throw domain_error("unknown summary factor '" + name + "'");
}

inline const char* to_string(Factor f) {
    switch (f) {
        case Factor::hr_diff: return "hr_diff";
        case Factor::shape_pattern: return "shape_pattern";
        case Factor::rho: return "rho";
        case Factor::global: return "global";
    }
    return "global";
}

struct FactorLevel {
    std::string label;
    std::size_t count = 0;
    double min = NAN;
    double median = NAN;
    double max = NAN;
};

/// Sorted-midpoint median: mean of the two middle order statistics for even n.
inline double median(std::vector<double> v) {
    if (v.empty()) throw domain_error("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline std::string trim_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Values are snapped to 1e-9 so that e.g. |0.9 - 0.6| and |0.8 - 0.5| share a level.
inline double snap(double x) { return std::round(x * 1e9) / 1e9; }

// Sort key and label of a row's level.
inline std::pair<double, std::string> level_of(const SweepRow& row, Factor f) {
    const auto& s = row.scenario;
    switch (f) {
        case Factor::hr_diff: {
            const double d = snap(std::abs(s.endpoint1.hr - s.endpoint2.hr));
            return {d, trim_number(d)};
        }
        case Factor::shape_pattern:
            if (s.endpoint1.shape == s.endpoint2.shape) {
                return {s.endpoint1.shape, "both-" + trim_number(s.endpoint1.shape)};
            }
            return {INFINITY, "different"};
        case Factor::rho: return {s.rho, trim_number(s.rho)};
        case Factor::global: return {0.0, "global"};
    }
    return {0.0, "global"};
}

}  // namespace detail

/// Min, median and max of R per factor level over the ok rows.
inline std::vector<FactorLevel> summarize_by_factor(const std::vector<SweepRow>& rows, Factor factor,
                                                    AhrWeighting weighting = AhrWeighting::density) {
    std::map<std::pair<double, std::string>, std::vector<double>> groups;
    for (const auto& row : rows) {
        if (row.status != RowStatus::ok) continue;
        const double r = row.r(weighting);
        if (std::isnan(r)) continue;
        groups[detail::level_of(row, factor)].push_back(r);
    }
    if (groups.empty()) throw domain_error("no ok rows to summarize");
    std::vector<FactorLevel> out;
    for (auto& [key, values] : groups) {
        FactorLevel lvl;
        lvl.label = key.second;
        lvl.count = values.size();
        lvl.min = *std::min_element(values.begin(), values.end());
        lvl.max = *std::max_element(values.begin(), values.end());
        lvl.median = median(std::move(values));
        out.push_back(std::move(lvl));
    }
    return out;
}

inline std::vector<FactorLevel> summarize_by_factor(const std::vector<SweepRow>& rows, const std::string& factor,
                                                    AhrWeighting weighting = AhrWeighting::density) {
    return summarize_by_factor(rows, parse_factor(factor), weighting);
}

struct FlagCell {
    /// Shape panel, "b1/b2" (e.g. "0.5/2").
    std::string shapes;
    double shape1 = 0.0;
    double shape2 = 0.0;
    double hr_diff = 0.0;
    double rho = 0.0;
    std::size_t total = 0;
    std::size_t flagged = 0;

    double fraction() const { return total == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(total); }
};

/// Counts of ok rows with R > threshold per (shape panel, |HR1 - HR2|, rho).
/// Panels keep the ordered shape pair so opposite-direction hazards (0.5 vs 2)
/// stay distinguishable from other unequal pairs.
inline std::vector<FlagCell> flag_distribution(const std::vector<SweepRow>& rows, double threshold,
                                               AhrWeighting weighting = AhrWeighting::density) {
    std::map<std::tuple<double, double, double, double>, FlagCell> cells;
    for (const auto& row : rows) {
        if (row.status != RowStatus::ok) continue;
        const auto& s = row.scenario;
        const double diff = detail::snap(std::abs(s.endpoint1.hr - s.endpoint2.hr));
        auto key = std::make_tuple(s.endpoint1.shape, s.endpoint2.shape, diff, s.rho);
        auto& cell = cells[key];
        if (cell.total == 0) {
            cell.shapes = detail::trim_number(s.endpoint1.shape) + "/" + detail::trim_number(s.endpoint2.shape);
            cell.shape1 = s.endpoint1.shape;
            cell.shape2 = s.endpoint2.shape;
            cell.hr_diff = diff;
            cell.rho = s.rho;
        }
        ++cell.total;
        if (row.r(weighting) > threshold) ++cell.flagged;
    }
    std::vector<FlagCell> out;
    out.reserve(cells.size());
    for (auto& [k, c] : cells) out.push_back(std::move(c));
    return out;
}

inline std::size_t count_status(const std::vector<SweepRow>& rows, RowStatus status) {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [status](const SweepRow& r) { return r.status == status; }));
}

}  // namespace cehr
