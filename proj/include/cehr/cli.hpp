#pragma once

// Command-line front end: evaluate, sweep, size, serve. `run` takes explicit
// output streams so it can be driven in-process as well as from main().

#include "cehr/errors.hpp"
#include "cehr/io.hpp"
#include "cehr/measures.hpp"
#include "cehr/service.hpp"
#include "cehr/sweep.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cehr::cli {

using io::json;

enum ExitCode : int { ok = 0, invalid = 1, infeasible = 2, numeric_failure = 3 };

inline std::string fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

inline std::string count_or_dash(const std::optional<long long>& v) { return v ? std::to_string(*v) : "-"; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input(path, "cannot read file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw invalid_input(path, std::string("malformed JSON: ") + e.what());
    }
}

/// Human-readable summary. The second line carries the headline indicators.
inline std::string summary_text(const NphSummary& s) {
    std::string out;
    out += "mHR=" + fixed(s.m_hr, 4) + " MHR=" + fixed(s.M_hr, 4) + " aHR=" + fixed(s.a_hr, 4) + " (" +
           to_string(s.weighting) + ")\n";
    out += "D=" + fixed(s.d, 3) + " R=" + (s.r ? fixed(*s.r, 2) : std::string("-")) +
           " flag=" + (s.nph_flag ? "yes" : "no") + " threshold=" + fixed(s.threshold, 2) + "\n";
    out += "aHR_density=" + fixed(s.a_hr_density, 4) + " aHR_uniform=" + fixed(s.a_hr_uniform, 4) +
           " HR*(0+)=" + fixed(s.hr_limit_at_zero, 4) + "\n";
    out += "P*_control=" + fixed(s.p_star_control, 4) + " P*_treatment=" + fixed(s.p_star_treatment, 4) + "\n";
    out += "events_aHR=" + count_or_dash(s.events_a) + " events_MHR=" + count_or_dash(s.events_M) +
           " n_aHR=" + count_or_dash(s.n_a) + " n_MHR=" + count_or_dash(s.n_M) + "\n";
    return out;
}

inline std::string summary_csv(const NphSummary& s) {
    auto num = [](double x) { return numeric::format_double(x); };
    auto opt = [](const std::optional<long long>& v) { return v ? std::to_string(*v) : std::string(); };
    std::string out =
        "m_hr,M_hr,a_hr,a_hr_density,a_hr_uniform,ahr_weighting,D,R,p_star_control,p_star_treatment,"
        "events_a,events_M,n_a,n_M,nph_flag,threshold,hr_limit_at_zero\n";
    out += num(s.m_hr) + "," + num(s.M_hr) + "," + num(s.a_hr) + "," + num(s.a_hr_density) + "," +
           num(s.a_hr_uniform) + "," + to_string(s.weighting) + "," + num(s.d) + "," + (s.r ? num(*s.r) : "") +
           "," + num(s.p_star_control) + "," + num(s.p_star_treatment) + "," + opt(s.events_a) + "," +
           opt(s.events_M) + "," + opt(s.n_a) + "," + opt(s.n_M) + "," + (s.nph_flag ? "1" : "0") + "," +
           num(s.threshold) + "," + num(s.hr_limit_at_zero) + "\n";
    return out;
}

inline void write_curve_csv(std::ostream& out, const HrCurve& c) {
    out << "t,hr_star,s_star_control,s_star_treatment\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        out << numeric::format_double(c.times[i]) << ',' << numeric::format_double(c.hr_star[i]) << ','
            << numeric::format_double(c.s_star_0[i]) << ',' << numeric::format_double(c.s_star_1[i]) << '\n';
    }
}

inline std::string factor_table(const std::vector<SweepRow>& rows, Factor f, AhrWeighting w) {
    std::string out = std::string("R by ") + to_string(f) + " (" + to_string(w) + " aHR)\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-12s %6s %9s %9s %9s\n", "level", "count", "min", "median", "max");
    out += buf;
    for (const auto& l : summarize_by_factor(rows, f, w)) {
        std::snprintf(buf, sizeof buf, "  %-12s %6zu %9.4f %9.4f %9.4f\n", l.label.c_str(), l.count, l.min,
                      l.median, l.max);
        out += buf;
    }
    return out;
}

inline std::string flag_table(const std::vector<SweepRow>& rows, double threshold, AhrWeighting w) {
    std::string out = "Fraction with R > " + fixed(threshold, 2) + " (" + to_string(w) + " aHR)\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-9s %7s %5s %6s %8s %9s\n", "shapes", "hr_diff", "rho", "total", "flagged",
                  "fraction");
    out += buf;
    for (const auto& c : flag_distribution(rows, threshold, w)) {
        std::snprintf(buf, sizeof buf, "  %-9s %7.2f %5.2f %6zu %8zu %9.4f\n", c.shapes.c_str(), c.hr_diff, c.rho,
                      c.total, c.flagged, c.fraction());
        out += buf;
    }
    return out;
}

namespace detail {

struct Overrides {
    std::optional<double> rho, tau, alpha, power, threshold, epsilon;
    std::optional<int> grid_points;
    std::optional<std::string> weighting;

    void apply(json& j) const {
        if (!j.is_object()) return;
        auto set = [&](const char* key, const auto& v) {
            if (v) j[key] = *v;
        };
        set("rho", rho);
        set("tau", tau);
        set("alpha", alpha);
        set("power", power);
        set("threshold", threshold);
        if (epsilon || grid_points || weighting) {
            if (!j.contains("numeric") || !j["numeric"].is_object()) j["numeric"] = json::object();
            json& n = j["numeric"];
            if (epsilon) n["epsilon"] = *epsilon;
            if (grid_points) n["grid_points"] = *grid_points;
            if (weighting) n["ahr_weighting"] = *weighting;
        }
    }
};

inline service::Server*& active_server() {
    static service::Server* s = nullptr;
    return s;
}

inline void stop_active_server(int) {
    if (auto* s = active_server()) s->stop();
}

}  // namespace detail

/// Maps exceptions from a subcommand body onto the exit-code taxonomy.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const invalid_input& e) {
        err << "error: invalid input";
        if (!e.field().empty()) err << " (" << e.field() << ")";
        err << ": " << e.what() << "\n";
        return invalid;
    } catch (const infeasible_error& e) {
        err << "error: infeasible calibration: " << e.what() << "\n";
        return infeasible;
    } catch (const numeric_error& e) {
        err << "error: numeric failure: " << e.what() << "\n";
        return numeric_failure;
    } catch (const std::domain_error& e) {
        err << "error: invalid input: " << e.what() << "\n";
        return invalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return numeric_failure;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Composite-endpoint hazard ratio engine: HR*(t), D/R indicators, sample sizes and sweeps", "cehr"};
    app.set_version_flag("--version", std::string(CEHR_VERSION));
    app.require_subcommand(1);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Evaluate one scenario and print its summary");
    std::string scenario_path, curve_path, format = "text";
    detail::Overrides ov;
    eval->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    eval->add_option("--curve", curve_path, "Write the full-resolution curve to this CSV file");
    eval->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
    eval->add_option("--rho", ov.rho, "Override Spearman correlation");
    eval->add_option("--tau", ov.tau, "Override follow-up horizon");
    eval->add_option("--alpha", ov.alpha, "Override one-sided significance level");
    eval->add_option("--power", ov.power, "Override power");
    eval->add_option("--threshold", ov.threshold, "Override the R flag threshold");
    eval->add_option("--weighting", ov.weighting, "Override aHR weighting")
        ->check(CLI::IsMember({"density", "uniform"}));
    eval->add_option("--grid-points", ov.grid_points, "Override time-grid size");
    eval->add_option("--epsilon", ov.epsilon, "Override first grid point as a fraction of tau");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a scenario grid (the full 3,888-scenario grid by default) and write rows CSV");
    std::string grid_path, out_path, summary_by, flags_weighting;
    std::string sweep_weighting = "both";
    std::optional<unsigned> threads;
    sweep->add_option("--grid", grid_path, "Grid JSON file (defaults to the full grid)");
    sweep->add_option("--out", out_path, "Rows CSV output path")->required();
    sweep->add_option("--summary-by", summary_by, "Print R summaries by factor")
        ->check(CLI::IsMember({"hr-diff", "hr_diff", "shapes", "shape_pattern", "rho", "global", "all"}));
    sweep->add_option("--weighting", sweep_weighting, "aHR weighting for printed summaries")
        ->check(CLI::IsMember({"density", "uniform", "both"}));
    sweep->add_flag("--flags", "Print the flagged fraction by shape pair, hr difference and rho");
    sweep->add_option("--threads", threads, "Worker threads (default CEHR_THREADS or logical cores)");

    // size
    auto* size = app.add_subcommand("size", "Required events and sample size for a target hazard ratio");
    double h = 0.0, alpha = 0.05, power = 0.8;
    std::optional<double> p0, p1;
    size->add_option("--hr", h, "Target hazard ratio in (0,1)")->required();
    size->add_option("--alpha", alpha, "One-sided significance level");
    size->add_option("--power", power, "Power");
    auto* p0_opt = size->add_option("--p0", p0, "Control-arm event probability");
    auto* p1_opt = size->add_option("--p1", p1, "Treatment-arm event probability");
    p0_opt->needs(p1_opt);
    p1_opt->needs(p0_opt);

    // serve
    auto* serve = app.add_subcommand("serve", "Start the HTTP service");
    std::optional<int> port;
    std::string host = "0.0.0.0";
    serve->add_option("--port", port, "Port (default CEHR_PORT or 8080)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Interface to bind");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << CEHR_VERSION << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return invalid;
    }

    if (*eval) {
        return guarded(err, [&] {
            json j = parse_json_file(scenario_path);
            ov.apply(j);
            const auto req = io::parse_evaluate_request(j);
            const auto ev = io::evaluate(req);
            if (!curve_path.empty()) {
                std::ofstream f(curve_path, std::ios::binary);
                if (!f) throw invalid_input(curve_path, "cannot write curve file");
                write_curve_csv(f, ev.curve);
            }
            if (format == "json") {
                out << io::evaluate_response(req, ev).dump(2) << "\n";
            } else if (format == "csv") {
                out << summary_csv(ev.summary);
            } else {
                out << summary_text(ev.summary);
            }
            return static_cast<int>(ok);
        });
    }

    if (*sweep) {
        return guarded(err, [&] {
            const GridSpec grid = grid_path.empty() ? [] {
                GridSpec g;
                g.validate();
                return g;
            }()
                                                    : io::parse_grid(parse_json_file(grid_path));
            const auto rows = run_sweep(grid, threads.value_or(default_thread_count()));
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw invalid_input(out_path, "cannot write rows file");
            write_sweep_csv(f, rows);
            f.close();
            err << rows.size() << " rows written to " << out_path << " (ok " << count_status(rows, RowStatus::ok)
                << ", infeasible " << count_status(rows, RowStatus::infeasible) << ", failed "
                << count_status(rows, RowStatus::failed) << ")\n";

            std::vector<AhrWeighting> weightings;
            if (sweep_weighting != "uniform") weightings.push_back(AhrWeighting::density);
            if (sweep_weighting != "density") weightings.push_back(AhrWeighting::uniform);
            std::vector<Factor> factors;
            if (summary_by == "all") {
                factors = {Factor::global, Factor::hr_diff, Factor::shape_pattern, Factor::rho};
            } else if (!summary_by.empty()) {
                factors = {parse_factor(summary_by)};
            }
            if (count_status(rows, RowStatus::ok) > 0) {
                for (auto w : weightings) {
                    for (auto fac : factors) out << factor_table(rows, fac, w);
                    if (sweep->count("--flags") > 0) out << flag_table(rows, grid.design.threshold, w);
                }
            }
            return static_cast<int>(ok);
        });
    }

    if (*size) {
        return guarded(err, [&] {
            const double e = events_required_exact(h, alpha, power);
            out << "events=" << events_required(h, alpha, power) << " events_exact=" << fixed(e, 4) << "\n";
            if (p0 && p1) {
                out << "n=" << sample_size(h, alpha, power, *p0, *p1)
                    << " n_exact=" << fixed(sample_size_exact(h, alpha, power, *p0, *p1), 4) << "\n";
            }
            return static_cast<int>(ok);
        });
    }

    if (*serve) {
        return guarded(err, [&] {
            const int p = port.value_or(service::port_from_environment());
            service::Server server;
            const int bound = server.bind(host, p);
            if (bound < 0) {
                err << "error: cannot bind " << host << ":" << p << "\n";
                return static_cast<int>(invalid);
            }
            err << "cehr " << CEHR_VERSION << " listening on " << host << ":" << bound << "\n";
            err.flush();
            detail::active_server() = &server;
            auto prev_int = std::signal(SIGINT, detail::stop_active_server);
            auto prev_term = std::signal(SIGTERM, detail::stop_active_server);
            const bool clean = server.listen();
            std::signal(SIGINT, prev_int);
            std::signal(SIGTERM, prev_term);
            detail::active_server() = nullptr;
            return clean ? static_cast<int>(ok) : static_cast<int>(numeric_failure);
        });
    }
    return invalid;
}

}  // namespace cehr::cli
