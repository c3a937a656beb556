// Command-line front end: ingest, fit, forecast, compare, simulate, optimize, serve.

#include "saucir/calibration.hpp"
#include "saucir/errors.hpp"
#include "saucir/evaluate.hpp"
#include "saucir/io.hpp"
#include "saucir/manifest.hpp"
#include "saucir/policy.hpp"
#include "saucir/scenario.hpp"
#include "saucir/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

using namespace saucir;
using io::json;

namespace {

struct DataOptions {
    std::string nodes;
    std::string epidemic;
    std::string flows;
    std::string flow_scale;
    std::string flow_share;

    bool given() const { return !nodes.empty() || !epidemic.empty() || !flows.empty() || !flow_scale.empty(); }

    io::DataPaths paths() const {
        if (nodes.empty() || epidemic.empty()) {
            throw InvalidArgument("--nodes and --epidemic are required");
        }
        if (flows.empty() == (flow_scale.empty() || flow_share.empty())) {
            throw InvalidArgument("give either --flows or both --flow-scale and --flow-share");
        }
        return {nodes, epidemic, flows, flow_scale, flow_share};
    }
};

void add_data_options(CLI::App* cmd, DataOptions& d, bool required) {
    cmd->add_option("--nodes", d.nodes, "node metadata CSV (id,name,population)")->required(required);
    cmd->add_option("--epidemic", d.epidemic, "daily epidemic CSV")->required(required);
    cmd->add_option("--flows", d.flows, "daily origin-destination flow CSV");
    cmd->add_option("--flow-scale", d.flow_scale, "daily outbound scale CSV (with --flow-share)");
    cmd->add_option("--flow-share", d.flow_share, "daily destination share CSV (with --flow-scale)");
}

struct Common {
    std::string out;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

void add_threads(CLI::App* cmd, Common& c) {
    cmd->add_option("--threads", c.threads, "worker threads")->envname("SAUCIR_THREADS")->check(CLI::PositiveNumber);
}

std::pair<Date, Date> parse_window(const std::string& text) {
    const auto colon = text.find(':');
    const auto a = colon == std::string::npos ? std::nullopt : parse_date(text.substr(0, colon));
    const auto b = colon == std::string::npos ? std::nullopt : parse_date(text.substr(colon + 1));
    if (!a || !b) {
        throw InvalidArgument("--train must be START:END with ISO dates, got '" + text + "'");
    }
    if (*b < *a) {
        throw InvalidArgument("--train ends before it starts: " + text);
    }
    return {*a, *b};
}

/// Output files, log and manifest of one command invocation.
class Run {
public:
    Run(std::string command, const std::string& out, std::vector<std::string> argv) : layout_(out) {
        manifest_.command = std::move(command);
        manifest_.argv = std::move(argv);
        manifest_.started = run::timestamp();
        layout_.prepare();
    }

    void log(const std::string& line) {
        std::cerr << line << '\n';
        log_ += line + '\n';
    }

    void input(const std::string& role, const std::string& path) {
        if (!path.empty()) {
            manifest_.add_input(role, path);
        }
    }

    void data_inputs(const io::DataPaths& p) {
        input("nodes", p.nodes);
        input("epidemic", p.epidemic);
        input("flows", p.flows);
        input("flow_scale", p.flow_scale);
        input("flow_share", p.flow_share);
    }

    void write_main(const std::string& name, const json& j) { write(layout_.main(name), j.dump(2) + "\n"); }
    void write_side(const std::string& name, const std::string& content) { write(layout_.side(name), content); }

    void finish(json config, std::optional<std::uint64_t> seed) {
        if (const auto path = layout_.log()) {
            manifest_.outputs.push_back(path->string());
            io::write_text(path->string(), log_);
        }
        manifest_.config = std::move(config);
        manifest_.seed = seed;
        manifest_.finished = run::timestamp();
        io::write_text(layout_.manifest().string(), run::to_json(manifest_).dump(2) + "\n");
    }

private:
    void write(const std::filesystem::path& path, const std::string& content) {
        io::write_text(path.string(), content);
        manifest_.outputs.push_back(path.string());
        log("wrote " + path.string());
    }

    run::OutputLayout layout_;
    run::Manifest manifest_;
    std::string log_;
};

io::FitDocument read_fit(const std::string& path) {
    try {
        return io::fit_from_json(json::parse(ingest::read_file(path)));
    } catch (const json::parse_error& e) {
        throw DataError("fit file '" + path + "' is not valid JSON: " + e.what());
    }
}

/// The fit plus the dataset it was made from (or the one given explicitly).
std::pair<io::FitDocument, ingest::Dataset> fit_and_data(const std::string& fit_path, const DataOptions& data,
                                                           Run& run) {
    auto doc = read_fit(fit_path);
    run.input("fit", fit_path);
    const auto paths = data.given() ? data.paths() : doc.data;
    run.data_inputs(paths);
    auto ds = io::load_dataset(paths);
    io::check_fit_matches(doc, ds);
    return {std::move(doc), std::move(ds)};
}

std::vector<std::size_t> node_indices(const ingest::Dataset& ds, const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    for (const auto& id : ids) {
        const auto idx = ds.node_index(id);
        if (!idx) {
            throw InvalidArgument("unknown node '" + id + "'");
        }
        out.push_back(*idx);
    }
    return out;
}

std::string absolute_path(const std::string& p) {
    return p.empty() ? p : std::filesystem::weakly_canonical(std::filesystem::absolute(p)).string();
}

io::DataPaths absolute(io::DataPaths p) {
    for (auto* s : {&p.nodes, &p.epidemic, &p.flows, &p.flow_scale, &p.flow_share}) {
        *s = absolute_path(*s);
    }
    return p;
}

json data_json(const DataOptions& d) {
    return io::to_json(io::DataPaths{d.nodes, d.epidemic, d.flows, d.flow_scale, d.flow_share});
}

std::atomic<service::Service*> g_service{nullptr};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);

    CLI::App app{"SaucIR epidemic engine: fit, forecast, compare, optimize migration schedules, serve the API"};
    app.require_subcommand(1);
    app.set_version_flag("--version", run::kVersion);

    DataOptions data;
    Common common;
    std::string train = "2020-01-24:2020-02-15";
    double theta = 0.25;
    int max_evals = calibration::FitConfig{}.max_evals;
    int horizon = 3;
    std::string fit_path;
    std::vector<std::string> methods;

    auto* ingest_cmd = app.add_subcommand("ingest", "validate input files and write them in canonical form");
    add_data_options(ingest_cmd, data, true);
    ingest_cmd->add_option("--out", common.out, "output directory")->default_val("saucir-ingest");

    auto* fit_cmd = app.add_subcommand("fit", "fit per-node parameters on a training window");
    add_data_options(fit_cmd, data, true);
    fit_cmd->add_option("--train", train, "training window START:END, inclusive")->capture_default_str();
    fit_cmd->add_option("--theta", theta, "asymptomatic share, in [0, 1)")->capture_default_str();
    fit_cmd->add_option("--max-evals", max_evals, "loss evaluation budget")->capture_default_str();
    fit_cmd->add_option("--seed", common.seed, "search seed")->capture_default_str();
    add_threads(fit_cmd, common);
    fit_cmd->add_option("--out", common.out, "fit JSON file or output directory")->default_val("saucir-fit");

    auto* forecast_cmd = app.add_subcommand("forecast", "forecast cumulative cases after the training window");
    forecast_cmd->add_option("--fit", fit_path, "fit JSON")->required();
    add_data_options(forecast_cmd, data, false);
    forecast_cmd->add_option("--horizon", horizon, "days after the training window")->capture_default_str();
    forecast_cmd->add_option("--out", common.out, "report JSON file or output directory")
        ->default_val("saucir-forecast");

    auto* compare_cmd = app.add_subcommand("compare", "fit and score SIR, SIR+M, SaucIR-M and SaucIR");
    add_data_options(compare_cmd, data, true);
    compare_cmd->add_option("--train", train, "training window START:END, inclusive")->capture_default_str();
    compare_cmd->add_option("--theta", theta, "asymptomatic share, in [0, 1)")->capture_default_str();
    compare_cmd->add_option("--horizon", horizon, "holdout days")->capture_default_str();
    compare_cmd->add_option("--methods", methods, "comma-separated subset of SIR,SIR+M,SaucIR-M,SaucIR")
        ->delimiter(',');
    compare_cmd->add_option("--max-evals", max_evals, "loss evaluation budget per method")->capture_default_str();
    compare_cmd->add_option("--seed", common.seed, "search seed")->capture_default_str();
    add_threads(compare_cmd, common);
    compare_cmd->add_option("--out", common.out, "comparison JSON file or output directory")
        ->default_val("saucir-compare");

    double mobility_multiplier = 1.0;
    std::optional<double> theta_override;
    auto* simulate_cmd = app.add_subcommand("simulate", "what-if run from the end of the training window");
    simulate_cmd->add_option("--fit", fit_path, "fit JSON")->required();
    add_data_options(simulate_cmd, data, false);
    simulate_cmd->add_option("--horizon", horizon, "days to simulate")->capture_default_str();
    simulate_cmd->add_option("--mobility-multiplier", mobility_multiplier, "multiplier on every flow")
        ->capture_default_str();
    simulate_cmd->add_option("--theta", theta_override, "override the fitted asymptomatic share");
    simulate_cmd->add_option("--out", common.out, "result JSON file or output directory")
        ->default_val("saucir-simulate");

    std::string scale_text = "small";
    std::string start_text;
    std::optional<int> opt_horizon;
    std::vector<std::string> targets;
    policy::GAConfig ga;
    auto* optimize_cmd = app.add_subcommand("optimize", "search a migration schedule that minimizes confirmed cases");
    optimize_cmd->add_option("--fit", fit_path, "fit JSON")->required();
    add_data_options(optimize_cmd, data, false);
    optimize_cmd->add_option("--scale", scale_text, "aggregate multiplier: small, medium, large or a number")
        ->capture_default_str();
    optimize_cmd->add_option("--start", start_text, "first day (default: the fit's training start)");
    optimize_cmd->add_option("--horizon", opt_horizon, "days (default: length of the training window)");
    optimize_cmd->add_option("--targets", targets, "comma-separated node ids to minimize over (default: all)")
        ->delimiter(',');
    optimize_cmd->add_option("--population", ga.population_size, "population size")->capture_default_str();
    optimize_cmd->add_option("--generations", ga.generations, "generations")->capture_default_str();
    optimize_cmd->add_option("--crossover", ga.crossover_rate, "crossover rate")->capture_default_str();
    optimize_cmd->add_option("--mutation", ga.mutation_rate, "mutation rate")->capture_default_str();
    optimize_cmd->add_option("--elitism", ga.elitism_count, "elite individuals kept per generation")
        ->capture_default_str();
    optimize_cmd->add_option("--seed", common.seed, "GA seed")->capture_default_str();
    add_threads(optimize_cmd, common);
    optimize_cmd->add_option("--out", common.out, "result JSON file or output directory")
        ->default_val("saucir-optimize");

    std::vector<std::string> fit_specs;
    std::string host = "127.0.0.1";
    int port = 8080;
    service::Options service_options;
    auto* serve_cmd = app.add_subcommand("serve", "serve the HTTP API");
    serve_cmd->add_option("--fit", fit_specs, "fit JSON, as PATH or ID=PATH; repeatable");
    add_data_options(serve_cmd, data, false);
    serve_cmd->add_option("--host", host, "address to bind")->capture_default_str();
    serve_cmd->add_option("--port", port, "port to bind")->capture_default_str();
    serve_cmd->add_option("--capacity", service_options.job_capacity, "concurrent optimization jobs")
        ->capture_default_str();
    serve_cmd->add_option("--cors-origin", service_options.cors_origin, "Access-Control-Allow-Origin value")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*ingest_cmd) {
            const auto paths = data.paths();
            Run run("ingest", common.out, args);
            run.data_inputs(paths);
            const auto ds = io::load_dataset(paths);
            run.log("loaded " + std::to_string(ds.node_count()) + " nodes over " + std::to_string(ds.day_count()) +
                    " days, " + format_date(ds.first_date()) + " to " + format_date(ds.last_date()));
            run.write_side("nodes.csv", ingest::write_nodes_csv(ds.nodes));
            run.write_side("epidemic.csv", ingest::write_epidemic_csv(ds.series));
            run.write_side("flows.csv", ingest::write_flow_edges(ds.flows));
            run.finish({{"data", io::to_json(paths)}}, std::nullopt);
            return 0;
        }

        if (*fit_cmd || *compare_cmd) {
            const auto paths = data.paths();
            calibration::FitConfig cfg;
            std::tie(cfg.train_start, cfg.train_end) = parse_window(train);
            cfg.theta = theta;
            cfg.max_evals = max_evals;
            cfg.seed = common.seed;
            cfg.threads = common.threads;
            cfg.validate();
            const json config{{"data", io::to_json(paths)},
                              {"train", train},
                              {"theta", theta},
                              {"max_evals", max_evals},
                              {"seed", common.seed},
                              {"threads", common.threads}};

            if (*fit_cmd) {
                Run run("fit", common.out, args);
                run.data_inputs(paths);
                const auto ds = io::load_dataset(paths);
                run.log("fitting " + std::to_string(ds.node_count()) + " nodes on " + train);
                io::FitDocument doc;
                doc.fit = calibration::fit_parameters(
                    ds, cfg, calibration::window_schedule(ds, cfg.train_start, cfg.train_days() - 1));
                for (const auto& n : ds.nodes) {
                    doc.node_ids.push_back(n.id);
                }
                doc.data = absolute(paths);
                doc.config = cfg;
                run.log("train loss " + io::format_double(doc.fit.train_loss) + " after " +
                        std::to_string(doc.fit.evals_used) + " evaluations");
                run.write_main("fit.json", io::to_json(doc));
                run.finish(config, common.seed);
                return 0;
            }

            std::vector<evaluate::Method> chosen;
            for (const auto& m : methods) {
                chosen.push_back(evaluate::parse_method(m));
            }
            if (chosen.empty()) {
                chosen = evaluate::all_methods();
            }
            json cmp_config = config;
            cmp_config["horizon"] = horizon;
            cmp_config["methods"] = json::array();
            for (auto m : chosen) {
                cmp_config["methods"].push_back(evaluate::method_name(m));
            }
            Run run("compare", common.out, args);
            run.data_inputs(paths);
            const auto ds = io::load_dataset(paths);
            const auto cmp = evaluate::compare_models(ds, cfg, horizon, chosen);
            run.write_main("comparison.json", io::to_json(cmp));
            run.write_side("mape.csv", io::mape_table_csv(cmp));
            run.write_side("rmse.csv", io::rmse_table_csv(cmp));
            run.write_side("plot.csv", io::plot_csv(cmp));
            run.finish(cmp_config, common.seed);
            return 0;
        }

        if (*forecast_cmd) {
            Run run("forecast", common.out, args);
            const auto [doc, ds] = fit_and_data(fit_path, data, run);
            const auto reports = scenario::run_forecast(ds, doc.fit, horizon);
            for (const auto& r : reports) {
                if (r.mape) {
                    run.log(r.node + " mape " + io::format_double(*r.mape));
                }
            }
            run.write_main("forecast.json", io::to_json(reports));
            run.write_side("forecast.csv", io::forecast_csv(reports));
            run.write_side("plot.csv", io::plot_csv(reports, "SaucIR"));
            run.finish({{"fit", fit_path}, {"data", data_json(data)}, {"horizon", horizon}}, std::nullopt);
            return 0;
        }

        if (*simulate_cmd) {
            Run run("simulate", common.out, args);
            const auto [doc, ds] = fit_and_data(fit_path, data, run);
            scenario::ScenarioRequest req;
            req.horizon = horizon;
            req.mobility_multiplier = mobility_multiplier;
            req.theta = theta_override;
            const auto result = scenario::run_scenario(ds, doc.fit, req);
            run.log("total D " + io::format_double(result.total_d));
            run.write_main("simulation.json", io::to_json(result, doc.node_ids));
            run.write_side("trace.csv", io::trace_csv(result.trace, doc.node_ids));
            run.finish({{"fit", fit_path},
                        {"data", data_json(data)},
                        {"horizon", horizon},
                        {"mobility_multiplier", mobility_multiplier},
                        {"theta", theta_override ? json(*theta_override) : json(nullptr)}},
                       std::nullopt);
            return 0;
        }

        if (*optimize_cmd) {
            const double scale = scenario::parse_scale(scale_text);
            ga.seed = common.seed;
            ga.threads = common.threads;
            if (optimize_cmd->count("--elitism") == 0) {
                ga.elitism_count = std::min(ga.elitism_count, std::max(0, ga.population_size - 1));
            }
            ga.validate();
            Run run("optimize", common.out, args);
            const auto [doc, ds] = fit_and_data(fit_path, data, run);
            Date start = doc.fit.train_start;
            if (!start_text.empty()) {
                const auto d = parse_date(start_text);
                if (!d) {
                    throw InvalidArgument("--start is not an ISO date: " + start_text);
                }
                start = *d;
            }
            const int days = opt_horizon.value_or(days_between(doc.fit.train_start, doc.fit.train_end));
            const auto problem =
                scenario::optimization_problem(ds, doc.fit, start, days, node_indices(ds, targets), scale);
            run.log("optimizing " + std::to_string(days) + " days from " + format_date(start) + " at scale " +
                    io::format_double(scale));
            const auto result = policy::optimize(problem, ga, [&](const policy::Progress& p) {
                if (p.generation == p.generations || p.generation % 50 == 0) {
                    run.log("generation " + std::to_string(p.generation) + "/" + std::to_string(p.generations) +
                            " best " + io::format_double(p.best_objective));
                }
            });
            run.write_main("optimization.json", io::to_json(result, doc.node_ids));
            run.write_side("schedule.csv", io::schedule_csv(result.best_schedule, doc.node_ids));
            run.finish({{"fit", fit_path},
                        {"data", data_json(data)},
                        {"scale", scale},
                        {"start", format_date(start)},
                        {"horizon", days},
                        {"targets", targets},
                        {"population", ga.population_size},
                        {"generations", ga.generations},
                        {"crossover", ga.crossover_rate},
                        {"mutation", ga.mutation_rate},
                        {"elitism", ga.elitism_count},
                        {"seed", common.seed},
                        {"threads", common.threads}},
                       common.seed);
            return 0;
        }

        if (*serve_cmd) {
            auto inputs = service::load_inputs(data.given() ? std::optional(data.paths()) : std::nullopt, fit_specs);
            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);

            service::Service svc(std::move(inputs), service_options);
            if (!svc.bind(host, port)) {
                std::cerr << "error: cannot bind " << host << ":" << port << '\n';
                return 1;
            }
            g_service = &svc;
            std::jthread waiter([&] {
                int sig = 0;
                sigwait(&signals, &sig);
                if (auto* s = g_service.load()) {
                    s->stop();
                }
            });
            std::cerr << "listening on " << host << ":" << port << '\n';
            svc.run();
            g_service = nullptr;
            // Unblock the waiter if the server stopped on its own.
            pthread_kill(waiter.native_handle(), SIGTERM);
            return 0;
        }
    } catch (const FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const SimulationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
