#include "saucir/service.hpp"

#include "saucir/errors.hpp"
#include "saucir/manifest.hpp"
#include "saucir/policy.hpp"
#include "saucir/scenario.hpp"

#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <stop_token>
#include <thread>

namespace saucir::service {

using io::json;

namespace {

struct HttpError : std::runtime_error {
    HttpError(int status, std::string code, const std::string& message, std::vector<std::string> details = {})
        : std::runtime_error(message), status(status), code(std::move(code)), details(std::move(details)) {}
    int status;
    std::string code;
    std::vector<std::string> details;
};

struct Cancelled : std::runtime_error {
    Cancelled() : std::runtime_error("cancelled at shutdown") {}
};

json error_body(const std::string& code, const std::string& message, const std::vector<std::string>& details) {
    return {{"code", code}, {"message", message}, {"details", details}};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

/// Typed access to a JSON object body; type problems are collected and
/// reported together as one 400.
class Body {
public:
    explicit Body(const std::string& raw) {
        try {
            j_ = json::parse(raw.empty() ? std::string("{}") : raw);
        } catch (const json::parse_error& e) {
            throw HttpError(400, "bad_request", "request body is not valid JSON", {e.what()});
        }
        if (!j_.is_object()) {
            throw HttpError(400, "bad_request", "request body must be a JSON object");
        }
    }

    void allow(std::initializer_list<std::string> keys) { check_keys(j_, "", keys); }

    void check_keys(const json& obj, const std::string& prefix, std::initializer_list<std::string> keys) {
        for (const auto& [k, v] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                fail(prefix + k + ": unknown field");
            }
        }
    }

    const json* find(const json& obj, const std::string& key) const {
        const auto it = obj.find(key);
        return it == obj.end() || it->is_null() ? nullptr : &*it;
    }
    const json* find(const std::string& key) const { return find(j_, key); }

    std::optional<double> number(const json* v, const std::string& name) {
        if (!v) {
            return std::nullopt;
        }
        if (!v->is_number()) {
            fail(name + ": expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<long long> integer(const json* v, const std::string& name) {
        const auto d = number(v, name);
        if (!d) {
            return std::nullopt;
        }
        if (std::floor(*d) != *d || std::abs(*d) > 1e15) {
            fail(name + ": expected an integer");
            return std::nullopt;
        }
        return static_cast<long long>(*d);
    }

    std::optional<std::string> string(const json* v, const std::string& name) {
        if (!v) {
            return std::nullopt;
        }
        if (!v->is_string()) {
            fail(name + ": expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    void fail(std::string detail) { errors_.push_back(std::move(detail)); }

    void finish() const {
        if (!errors_.empty()) {
            throw HttpError(400, "invalid_request", "request body has invalid fields", errors_);
        }
    }

private:
    json j_;
    std::vector<std::string> errors_;
};

struct Job {
    std::string id;
    std::string state = "pending";
    int completed = 0;
    int total = 0;
    std::optional<json> result;
    std::string error;
    std::jthread thread;
};

}  // namespace

Inputs load_inputs(const std::optional<io::DataPaths>& data, const std::vector<std::string>& fit_specs) {
    Inputs in;
    for (const auto& spec : fit_specs) {
        const auto eq = spec.find('=');
        std::string id = eq == std::string::npos ? std::filesystem::path(spec).stem().string() : spec.substr(0, eq);
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        if (id.empty()) {
            throw InvalidArgument("fit '" + spec + "' has an empty id");
        }
        for (const auto& f : in.fits) {
            if (f.id == id) {
                throw InvalidArgument("fit id '" + id + "' is given twice");
            }
        }
        json j;
        try {
            j = json::parse(ingest::read_file(path));
        } catch (const json::parse_error& e) {
            throw DataError("fit file '" + path + "' is not valid JSON: " + e.what());
        }
        in.fits.push_back({id, io::fit_from_json(j)});
    }
    if (data) {
        in.dataset = io::load_dataset(*data);
    } else if (!in.fits.empty()) {
        in.dataset = io::load_dataset(in.fits.front().doc.data);
    }
    for (const auto& f : in.fits) {
        io::check_fit_matches(f.doc, *in.dataset);
    }
    return in;
}

struct Service::Impl {
    httplib::Server server;
    Inputs inputs;
    Options options;
    std::vector<std::string> node_ids;

    std::mutex jobs_mu;
    std::map<std::string, std::shared_ptr<Job>> jobs;
    std::size_t next_job = 1;

    Impl(Inputs in, Options opt) : inputs(std::move(in)), options(std::move(opt)) {
        if (!options.log) {
            options.log = [](const std::string& line) { std::cerr << line << '\n'; };
        }
        if (inputs.dataset) {
            for (const auto& n : inputs.dataset->nodes) {
                node_ids.push_back(n.id);
            }
        }
        routes();
    }

    ~Impl() {
        server.stop();
        std::vector<std::shared_ptr<Job>> all;
        {
            std::lock_guard lock(jobs_mu);
            for (auto& [id, job] : jobs) {
                all.push_back(job);
            }
        }
        for (auto& job : all) {
            job->thread.request_stop();
            if (job->thread.joinable()) {
                job->thread.join();
            }
        }
    }

    const LoadedFit& fit(const std::optional<std::string>& id) const {
        if (!id) {
            if (inputs.fits.size() == 1) {
                return inputs.fits.front();
            }
            throw HttpError(400, "invalid_request", "request body has invalid fields",
                            {"base_fit: required when more than one fit is loaded"});
        }
        for (const auto& f : inputs.fits) {
            if (f.id == *id) {
                return f;
            }
        }
        throw HttpError(404, "not_found", "no fit with id '" + *id + "'");
    }

    std::optional<std::size_t> node(Body& body, const json& v, const std::string& name) const {
        if (!v.is_string()) {
            body.fail(name + ": expected a node id");
            return std::nullopt;
        }
        const auto idx = inputs.dataset ? inputs.dataset->node_index(v.get<std::string>()) : std::nullopt;
        if (!idx) {
            body.fail(name + ": unknown node '" + v.get<std::string>() + "'");
        }
        return idx;
    }

    std::vector<std::size_t> targets(Body& body) const {
        std::vector<std::size_t> out;
        const json* t = body.find("target_nodes");
        if (!t) {
            return out;
        }
        if (!t->is_array()) {
            body.fail("target_nodes: expected an array of node ids");
            return out;
        }
        for (std::size_t i = 0; i < t->size(); ++i) {
            if (auto idx = node(body, (*t)[i], "target_nodes[" + std::to_string(i) + "]")) {
                out.push_back(*idx);
            }
        }
        return out;
    }

    /// A number for every node, or an object of per-node values.
    void per_node(Body& body, const json* v, const std::string& name, std::optional<double>& all,
                  std::map<std::size_t, double>& each) const {
        if (!v) {
            return;
        }
        if (v->is_object()) {
            for (const auto& [k, x] : v->items()) {
                const auto idx = node(body, json(k), name);
                const auto d = body.number(&x, name + "." + k);
                if (idx && d) {
                    each[*idx] = *d;
                }
            }
            return;
        }
        all = body.number(v, name);
    }

    json simulate(const std::string& raw) const {
        Body body(raw);
        body.allow({"base_fit", "overrides", "mobility_multiplier", "horizon", "target_nodes"});
        const auto& f = fit(body.string(body.find("base_fit"), "base_fit"));
        const std::size_t M = node_ids.size();

        scenario::ScenarioRequest req;
        if (const auto h = body.integer(body.find("horizon"), "horizon")) {
            req.horizon = static_cast<int>(std::clamp<long long>(*h, -1, scenario::kMaxHorizon + 1));
        } else if (!body.find("horizon")) {
            body.fail("horizon: required");
        }
        if (const json* o = body.find("overrides")) {
            if (!o->is_object()) {
                body.fail("overrides: expected an object");
            } else {
                body.check_keys(*o, "overrides.", {"theta", "quarantine", "alpha0_multiplier"});
                req.theta = body.number(body.find(*o, "theta"), "overrides.theta");
                per_node(body, body.find(*o, "quarantine"), "overrides.quarantine", req.quarantine,
                         req.node_quarantine);
                std::optional<double> alpha_all;
                per_node(body, body.find(*o, "alpha0_multiplier"), "overrides.alpha0_multiplier", alpha_all,
                         req.node_alpha0_multiplier);
                req.alpha0_multiplier = alpha_all.value_or(1.0);
            }
        }
        if (const json* m = body.find("mobility_multiplier")) {
            if (m->is_array()) {
                Matrix pm(M, M);
                bool ok = m->size() == M;
                for (std::size_t o = 0; ok && o < M; ++o) {
                    const auto& row = (*m)[o];
                    ok = row.is_array() && row.size() == M;
                    for (std::size_t d = 0; ok && d < M; ++d) {
                        ok = row[d].is_number();
                        if (ok) {
                            pm(o, d) = row[d].get<double>();
                        }
                    }
                }
                if (ok) {
                    req.pair_multiplier = std::move(pm);
                } else {
                    body.fail("mobility_multiplier: expected a number or a " + std::to_string(M) + " x " +
                              std::to_string(M) + " array of numbers (origin rows, destination columns)");
                }
            } else {
                req.mobility_multiplier = body.number(m, "mobility_multiplier").value_or(1.0);
            }
        }
        req.target_nodes = targets(body);
        body.finish();
        return io::to_json(scenario::run_scenario(*inputs.dataset, f.doc.fit, req), node_ids);
    }

    json forecast(const std::string& raw) const {
        Body body(raw);
        body.allow({"fit", "horizon"});
        const auto id = body.string(body.find("fit"), "fit");
        const auto horizon = body.integer(body.find("horizon"), "horizon").value_or(3);
        body.finish();
        const auto& f = fit(id);
        if (horizon < 0 || horizon > scenario::kMaxHorizon) {
            throw InvalidArgument("horizon must be between 0 and " + std::to_string(scenario::kMaxHorizon));
        }
        return io::to_json(scenario::run_forecast(*inputs.dataset, f.doc.fit, static_cast<int>(horizon)));
    }

    json job_status(const Job& job) const {
        json j{{"id", job.id},
               {"state", job.state},
               {"progress", {{"completed", job.completed}, {"total", job.total}}}};
        if (job.result) {
            j["result"] = *job.result;
        }
        if (job.state == "failed") {
            j["error"] = job.error;
        }
        return j;
    }

    json submit(const std::string& raw) {
        Body body(raw);
        body.allow({"base_fit", "start", "horizon", "scale", "target_nodes", "ga"});
        const auto& f = fit(body.string(body.find("base_fit"), "base_fit"));
        Date start = f.doc.fit.train_start;
        if (const auto s = body.string(body.find("start"), "start")) {
            if (const auto d = parse_date(*s)) {
                start = *d;
            } else {
                body.fail("start: expected an ISO date");
            }
        }
        const auto horizon = body.integer(body.find("horizon"), "horizon")
                                 .value_or(days_between(f.doc.fit.train_start, f.doc.fit.train_end));
        double scale = 1.0;
        if (const json* s = body.find("scale")) {
            if (s->is_string()) {
                try {
                    scale = scenario::parse_scale(s->get<std::string>());
                } catch (const InvalidArgument& e) {
                    body.fail(std::string("scale: ") + e.what());
                }
            } else {
                scale = body.number(s, "scale").value_or(1.0);
            }
        }
        const auto target_nodes = targets(body);
        policy::GAConfig cfg;
        if (const json* g = body.find("ga")) {
            if (!g->is_object()) {
                body.fail("ga: expected an object");
            } else {
                body.check_keys(*g, "ga.",
                                {"population_size", "generations", "crossover_rate", "mutation_rate",
                                 "elitism_count", "seed"});
                auto as_int = [&](const char* key, auto& field) {
                    if (const auto v = body.integer(body.find(*g, key), std::string("ga.") + key)) {
                        field = static_cast<std::remove_reference_t<decltype(field)>>(*v);
                    }
                };
                as_int("population_size", cfg.population_size);
                as_int("generations", cfg.generations);
                if (body.find(*g, "elitism_count")) {
                    as_int("elitism_count", cfg.elitism_count);
                } else {
                    cfg.elitism_count = std::min(cfg.elitism_count, std::max(0, cfg.population_size - 1));
                }
                if (const auto v = body.integer(body.find(*g, "seed"), "ga.seed")) {
                    if (*v < 0) {
                        body.fail("ga.seed: must be non-negative");
                    }
                    cfg.seed = static_cast<std::uint64_t>(*v);
                }
                cfg.crossover_rate = body.number(body.find(*g, "crossover_rate"), "ga.crossover_rate")
                                         .value_or(cfg.crossover_rate);
                cfg.mutation_rate =
                    body.number(body.find(*g, "mutation_rate"), "ga.mutation_rate").value_or(cfg.mutation_rate);
            }
        }
        body.finish();
        cfg.threads = 1;

        policy::Problem problem;
        try {
            cfg.validate();
            problem = scenario::optimization_problem(*inputs.dataset, f.doc.fit, start, static_cast<int>(horizon),
                                                     target_nodes, scale);
            problem.validate();
        } catch (const InvalidArgument& e) {
            throw HttpError(400, "invalid_config", e.what());
        } catch (const DataError& e) {
            throw HttpError(400, "invalid_config", e.what());
        }

        std::lock_guard lock(jobs_mu);
        std::size_t active = 0;
        for (const auto& [id, job] : jobs) {
            active += job->state == "pending" || job->state == "running";
        }
        if (active >= options.job_capacity) {
            throw HttpError(409, "at_capacity",
                            "the server already runs " + std::to_string(active) + " optimization jobs");
        }
        auto job = std::make_shared<Job>();
        job->id = "job-" + std::to_string(next_job++);
        job->total = cfg.generations;
        jobs[job->id] = job;
        const json status = job_status(*job);
        job->thread = std::jthread([this, job, problem = std::move(problem), cfg](std::stop_token stop) {
            {
                std::lock_guard l(jobs_mu);
                job->state = "running";
            }
            try {
                auto result = policy::optimize(problem, cfg, [&](const policy::Progress& p) {
                    if (stop.stop_requested()) {
                        throw Cancelled();
                    }
                    std::lock_guard l(jobs_mu);
                    job->completed = p.generation;
                });
                json out = io::to_json(result, node_ids);
                std::lock_guard l(jobs_mu);
                job->result = std::move(out);
                job->state = "done";
            } catch (const std::exception& e) {
                std::lock_guard l(jobs_mu);
                job->error = e.what();
                job->state = "failed";
            }
        });
        return status;
    }

    json status(const std::string& id) {
        std::lock_guard lock(jobs_mu);
        const auto it = jobs.find(id);
        if (it == jobs.end()) {
            throw HttpError(404, "not_found", "no job with id '" + id + "'");
        }
        return job_status(*it->second);
    }

    json health() const {
        json fits = json::array();
        for (const auto& f : inputs.fits) {
            fits.push_back(f.id);
        }
        return {{"status", "ok"}, {"version", run::kVersion}, {"nodes", node_ids.size()}, {"fits", fits}};
    }

    json nodes() const {
        json out = json::array();
        if (!inputs.dataset) {
            return {{"nodes", out}};
        }
        const auto& ds = *inputs.dataset;
        for (std::size_t n = 0; n < ds.node_count(); ++n) {
            const auto& s = ds.series[n];
            out.push_back({{"id", ds.nodes[n].id},
                           {"name", ds.nodes[n].name},
                           {"population", ds.nodes[n].population},
                           {"latest_D", s.cumulative_confirmed.empty() ? json(nullptr)
                                                                       : json(s.cumulative_confirmed.back())},
                           {"latest_date", s.dates.empty() ? json(nullptr) : json(format_date(s.dates.back()))}});
        }
        return {{"nodes", out}};
    }

    void routes() {
        server.Get("/health",
                   [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, health()); });
        server.Get("/nodes",
                   [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, nodes()); });
        server.Post("/simulate", [this](const httplib::Request& req, httplib::Response& res) {
            require_dataset();
            send_json(res, 200, simulate(req.body));
        });
        server.Post("/forecast", [this](const httplib::Request& req, httplib::Response& res) {
            require_dataset();
            send_json(res, 200, forecast(req.body));
        });
        server.Post("/optimize", [this](const httplib::Request& req, httplib::Response& res) {
            require_dataset();
            send_json(res, 202, submit(req.body));
        });
        server.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, status(req.matches[1]));
        });
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", options.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) {
                return httplib::Server::HandlerResponse::Unhandled;
            }
            const std::string code = res.status == 404 ? "not_found" : "http_" + std::to_string(res.status);
            const std::string message = res.status == 404 ? "no endpoint " + req.method + " " + req.path
                                                          : httplib::status_message(res.status);
            res.set_content(error_body(code, message, {}).dump(), "application/json");
            return httplib::Server::HandlerResponse::Handled;
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const HttpError& e) {
                send_json(res, e.status, error_body(e.code, e.what(), e.details));
            } catch (const InvalidArgument& e) {
                send_json(res, 422, error_body("invalid_parameters", e.what(), {}));
            } catch (const SimulationError& e) {
                send_json(res, 500,
                          error_body("simulation_failed", e.what(),
                                     {"node: " + std::to_string(e.node()), "compartment: " + e.compartment(),
                                      "day: " + std::to_string(e.day())}));
            } catch (const std::exception& e) {
                send_json(res, 500, error_body("internal", e.what(), {}));
            }
        });
        server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
            options.log(req.method + " " + req.path + " " + std::to_string(res.status) + " " +
                        std::to_string(res.body.size()) + "B");
        });
    }

    void require_dataset() const {
        if (!inputs.dataset || inputs.fits.empty()) {
            throw HttpError(404, "not_found", "no fit is loaded");
        }
    }
};

Service::Service(Inputs inputs, Options options) : impl_(std::make_unique<Impl>(std::move(inputs), std::move(options))) {}

Service::~Service() = default;

bool Service::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

int Service::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::run() { return impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace saucir::service
