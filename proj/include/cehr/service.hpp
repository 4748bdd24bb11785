#pragma once

// HTTP facade over the core. Request handling is split into pure functions
// (body in, status + body out) that the server routes call, so handlers can
// be exercised without a socket.

#include "cehr/errors.hpp"
#include "cehr/io.hpp"
#include "cehr/sweep.hpp"

#include <httplib.h>

#include <cstdlib>
#include <functional>
#include <memory>
#include <string>

#ifndef CEHR_VERSION
#define CEHR_VERSION "1.0.0"
#endif

namespace cehr::service {

using io::json;

struct Response {
    int status = 200;
    std::string body;
};

struct ServiceConfig {
    /// Largest grid accepted by /v1/sweep.
    std::size_t grid_cap = 10000;
    /// Worker threads per sweep request.
    unsigned threads = default_thread_count();
    /// Scenarios evaluated between streamed chunks of a sweep response.
    std::size_t sweep_batch = 64;

    /// Reads CEHR_GRID_CAP and CEHR_THREADS, keeping defaults for unset values.
    static ServiceConfig from_environment() {
        ServiceConfig c;
        if (const char* cap = std::getenv("CEHR_GRID_CAP"); cap && *cap) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(cap, &end, 10);
            if (end && *end == '\0' && v > 0) c.grid_cap = static_cast<std::size_t>(v);
        }
        return c;
    }
};

inline int port_from_environment(int fallback = 8080) {
    if (const char* p = std::getenv("CEHR_PORT"); p && *p) {
        char* end = nullptr;
        const long v = std::strtol(p, &end, 10);
        if (end && *end == '\0' && v > 0 && v < 65536) return static_cast<int>(v);
    }
    return fallback;
}

inline std::string error_body(const std::string& kind, const std::string& message, json extra = json::object()) {
    extra["error"] = kind;
    extra["message"] = message;
    return extra.dump();
}

/// Maps the library's exception taxonomy to HTTP statuses.
template <class F>
Response guarded(F&& body) {
    try {
        return body();
    } catch (const invalid_input& e) {
        return {400, error_body("invalid_input", e.what(), {{"field", e.field()}})};
    } catch (const infeasible_error& e) {
        return {422, error_body("infeasible", e.what(), {{"target", e.target()}, {"supremum", e.supremum()}})};
    } catch (const numeric_error& e) {
        return {500, error_body("numeric_failure", e.what())};
    } catch (const std::domain_error& e) {
        return {400, error_body("invalid_input", e.what(), {{"field", ""}})};
    } catch (const std::exception& e) {
        return {500, error_body("internal_error", e.what())};
    }
}

inline Response handle_health() { return {200, json{{"status", "ok"}, {"version", CEHR_VERSION}}.dump()}; }

inline Response handle_evaluate(const std::string& body) {
    return guarded([&] {
        const auto req = io::parse_evaluate_request(body);
        const auto ev = io::evaluate(req);
        return Response{200, io::evaluate_response(req, ev).dump()};
    });
}

/// Validates a sweep request; on success `grid` holds the parsed grid.
inline Response check_sweep(const std::string& body, const ServiceConfig& config, GridSpec& grid) {
    return guarded([&] {
        grid = io::parse_grid(body);
        const std::size_t n = grid.scenario_count();
        if (n > config.grid_cap) {
            return Response{413, error_body("grid_too_large",
                                            "grid has " + std::to_string(n) + " scenarios; the cap is " +
                                                std::to_string(config.grid_cap),
                                            {{"scenarios", n}, {"cap", config.grid_cap}})};
        }
        return Response{200, ""};
    });
}

/// Writes the sweep response JSON in pieces: a header, rows in batches as
/// they complete, then status counts and factor summaries. Returns false if
/// the sink refuses more data (client gone).
inline bool stream_sweep(const GridSpec& grid, const ServiceConfig& config,
                         const std::function<bool(const std::string&)>& sink) {
    const auto scenarios = enumerate_scenarios(grid);
    if (!sink("{\"count\":" + std::to_string(scenarios.size()) + ",\"rows\":[")) return false;
    std::vector<SweepRow> rows;
    rows.reserve(scenarios.size());
    const std::size_t batch = std::max<std::size_t>(1, config.sweep_batch);
    for (std::size_t start = 0; start < scenarios.size(); start += batch) {
        const std::size_t stop = std::min(scenarios.size(), start + batch);
        std::vector<ScenarioSpec> chunk(scenarios.begin() + static_cast<std::ptrdiff_t>(start),
                                        scenarios.begin() + static_cast<std::ptrdiff_t>(stop));
        auto done = run_scenarios(chunk, grid.design, config.threads, [](std::size_t) {});
        std::string text;
        for (std::size_t i = 0; i < done.size(); ++i) {
            if (start + i > 0) text += ',';
            text += io::row_to_json(done[i]).dump();
        }
        if (!sink(text)) return false;
        for (auto& r : done) rows.push_back(std::move(r));
    }
    json tail{{"ok", count_status(rows, RowStatus::ok)},
              {"infeasible", count_status(rows, RowStatus::infeasible)},
              {"failed", count_status(rows, RowStatus::failed)},
              {"summaries", io::sweep_summaries(rows)}};
    std::string text = "],";
    const std::string t = tail.dump();
    text.append(t, 1, std::string::npos);  // splice the object's members after "rows"
    return sink(text);
}

inline Response handle_sweep(const std::string& body, const ServiceConfig& config) {
    GridSpec grid;
    Response checked = check_sweep(body, config, grid);
    if (checked.status != 200) return checked;
    return guarded([&] {
        std::string out;
        stream_sweep(grid, config, [&](const std::string& s) {
            out += s;
            return true;
        });
        return Response{200, std::move(out)};
    });
}

/// Thin httplib server wrapper. Binding and serving are separate so callers
/// can learn the bound port (including an ephemeral one) before blocking.
class Server {
public:
    explicit Server(ServiceConfig config = ServiceConfig::from_environment())
        : config_(config), server_(std::make_unique<httplib::Server>()) {
        // httplib's default enables SO_REUSEPORT, which would let a second
        // instance silently share a port; keep only SO_REUSEADDR so a port
        // conflict fails at bind time.
        server_->set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        routes();
    }

    /// Binds to host:port; port 0 picks an ephemeral port. Returns the bound
    /// port, or -1 when binding fails.
    int bind(const std::string& host, int port) {
        if (port == 0) return server_->bind_to_any_port(host);
        return server_->bind_to_port(host, port) ? port : -1;
    }

    /// Serves until stop() is called. Returns false on socket failure.
    bool listen() { return server_->listen_after_bind(); }
    void stop() { server_->stop(); }
    bool is_running() const { return server_->is_running(); }
    void wait_until_ready() const { server_->wait_until_ready(); }

private:
    static void reply(httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    }

    void routes() {
        auto& s = *server_;
        s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                               {"Access-Control-Allow-Headers", "Content-Type"},
                               {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        s.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        s.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) { reply(res, handle_health()); });
        s.Post("/v1/evaluate",
               [](const httplib::Request& req, httplib::Response& res) { reply(res, handle_evaluate(req.body)); });
        s.Post("/v1/sweep", [this](const httplib::Request& req, httplib::Response& res) {
            GridSpec grid;
            const Response checked = check_sweep(req.body, config_, grid);
            if (checked.status != 200) {
                reply(res, checked);
                return;
            }
            const ServiceConfig config = config_;
            res.status = 200;
            res.set_chunked_content_provider("application/json", [grid, config](std::size_t, httplib::DataSink& sink) {
                const bool complete = stream_sweep(grid, config, [&](const std::string& piece) {
                    return sink.is_writable() && sink.write(piece.data(), piece.size());
                });
                if (complete) sink.done();
                return complete;
            });
        });
    }

    ServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace cehr::service
