#include "saucir/io.hpp"

#include "saucir/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace saucir::io {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

json bounds_json(const calibration::Bounds& b) { return json::array({b.lo, b.hi}); }

calibration::Bounds bounds_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Date date_from(const json& j, const char* key) {
    const auto text = j.at(key).get<std::string>();
    const auto d = parse_date(text);
    if (!d) {
        throw DataError(std::string("field '") + key + "' is not an ISO date: " + text);
    }
    return *d;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_double(double v) {
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write file '" + path + "'");
    }
    out << content;
    if (!out) {
        throw DataError("error while writing '" + path + "'");
    }
}

json to_json(const DataPaths& p) {
    json j{{"nodes", p.nodes}, {"epidemic", p.epidemic}};
    if (!p.flows.empty()) {
        j["flows"] = p.flows;
    } else {
        j["flow_scale"] = p.flow_scale;
        j["flow_share"] = p.flow_share;
    }
    return j;
}

DataPaths data_paths_from_json(const json& j) {
    DataPaths p;
    p.nodes = j.value("nodes", "");
    p.epidemic = j.value("epidemic", "");
    p.flows = j.value("flows", "");
    p.flow_scale = j.value("flow_scale", "");
    p.flow_share = j.value("flow_share", "");
    return p;
}

ingest::Dataset load_dataset(const DataPaths& paths) {
    if (paths.nodes.empty() || paths.epidemic.empty()) {
        throw InvalidArgument("a nodes file and an epidemic file are required");
    }
    if (paths.flows.empty() && (paths.flow_scale.empty() || paths.flow_share.empty())) {
        throw InvalidArgument("flows are required: an edge file, or a scale file together with a share file");
    }
    const auto nodes = ingest::parse_nodes_csv(ingest::read_file(paths.nodes));
    auto series = ingest::parse_epidemic_csv(ingest::read_file(paths.epidemic));
    std::optional<DateWindow> range;
    for (const auto& s : series) {
        if (s.dates.empty()) {
            continue;
        }
        if (!range) {
            range = DateWindow{s.dates.front(), s.dates.back()};
        } else {
            range->start = std::min(range->start, s.dates.front());
            range->end = std::max(range->end, s.dates.back());
        }
    }
    auto flows = paths.flows.empty()
                     ? ingest::parse_flow_scaled(ingest::read_file(paths.flow_scale),
                                                 ingest::read_file(paths.flow_share), nodes, range)
                     : ingest::parse_flow_edges(ingest::read_file(paths.flows), nodes, range);
    return ingest::validate_dataset(std::move(series), std::move(flows), nodes);
}

json to_json(const FitDocument& doc) {
    const auto& f = doc.fit;
    const auto& p = f.params;
    json nodes = json::array();
    for (std::size_t n = 0; n < p.node_count(); ++n) {
        nodes.push_back({{"id", doc.node_ids.at(n)},
                         {"alpha0", p.alpha0[n]},
                         {"tau", p.tau[n]},
                         {"zeta", p.zeta[n]},
                         {"beta", p.beta[n]},
                         {"quarantine", p.quarantine[n]}});
    }
    const auto& c = doc.config;
    return {{"train_start", format_date(f.train_start)},
            {"train_end", format_date(f.train_end)},
            {"theta", p.theta},
            {"incubation_lag", p.incubation_lag},
            {"asymptomatic_lag", p.asymptomatic_lag},
            {"migration_uses_decayed_alpha", p.migration_uses_decayed_alpha},
            {"nodes", nodes},
            {"loss", calibration::to_string(f.loss)},
            {"train_loss", f.train_loss},
            {"evals_used", f.evals_used},
            {"converged", f.converged},
            {"loss_history", f.loss_history},
            {"config",
             {{"max_evals", c.max_evals},
              {"seed", c.seed},
              {"bounds",
               {{"alpha0", bounds_json(c.alpha0)},
                {"tau", bounds_json(c.tau)},
                {"zeta", bounds_json(c.zeta)},
                {"beta", bounds_json(c.beta)}}},
              {"quarantine", c.quarantine.empty() ? "labels" : "given"}}},
            {"data", to_json(doc.data)}};
}

FitDocument fit_from_json(const json& j) {
    try {
        FitDocument doc;
        auto& f = doc.fit;
        f.train_start = date_from(j, "train_start");
        f.train_end = date_from(j, "train_end");
        f.loss = calibration::parse_loss_kind(j.value("loss", "cumulative"));
        f.train_loss = j.value("train_loss", 0.0);
        f.evals_used = j.value("evals_used", 0);
        f.converged = j.value("converged", false);
        f.loss_history = j.value("loss_history", std::vector<double>{});
        auto& p = f.params;
        p.theta = j.at("theta").get<double>();
        p.incubation_lag = j.value("incubation_lag", 5);
        p.asymptomatic_lag = j.value("asymptomatic_lag", 21);
        p.migration_uses_decayed_alpha = j.value("migration_uses_decayed_alpha", false);
        for (const auto& n : j.at("nodes")) {
            doc.node_ids.push_back(n.at("id").get<std::string>());
            p.alpha0.push_back(n.at("alpha0").get<double>());
            p.tau.push_back(n.at("tau").get<double>());
            p.zeta.push_back(n.at("zeta").get<double>());
            p.beta.push_back(n.at("beta").get<double>());
            p.quarantine.push_back(n.at("quarantine").get<double>());
        }
        p.validate();
        if (j.contains("data")) {
            doc.data = data_paths_from_json(j.at("data"));
        }
        auto& c = doc.config;
        c.train_start = f.train_start;
        c.train_end = f.train_end;
        c.theta = p.theta;
        c.loss = f.loss;
        c.incubation_lag = p.incubation_lag;
        c.asymptomatic_lag = p.asymptomatic_lag;
        if (j.contains("config")) {
            const auto& jc = j.at("config");
            c.max_evals = jc.value("max_evals", c.max_evals);
            c.seed = jc.value("seed", c.seed);
            if (jc.contains("bounds")) {
                const auto& b = jc.at("bounds");
                c.alpha0 = bounds_from(b.at("alpha0"));
                c.tau = bounds_from(b.at("tau"));
                c.zeta = bounds_from(b.at("zeta"));
                c.beta = bounds_from(b.at("beta"));
            }
            if (jc.value("quarantine", "labels") == "given") {
                c.quarantine = p.quarantine;
            }
        }
        return doc;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed fit document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("fit document holds invalid parameters: ") + e.what());
    }
}

void check_fit_matches(const FitDocument& doc, const ingest::Dataset& dataset) {
    if (doc.node_ids.size() != dataset.node_count()) {
        throw DataError("fit has " + std::to_string(doc.node_ids.size()) + " nodes but the dataset has " +
                        std::to_string(dataset.node_count()));
    }
    for (std::size_t n = 0; n < doc.node_ids.size(); ++n) {
        if (doc.node_ids[n] != dataset.nodes[n].id) {
            throw DataError("fit node " + std::to_string(n) + " is '" + doc.node_ids[n] + "' but the dataset has '" +
                            dataset.nodes[n].id + "'");
        }
    }
    if (!dataset.date_index(doc.fit.train_start) || !dataset.date_index(doc.fit.train_end)) {
        throw DataError("the fit's training window " + format_date(doc.fit.train_start) + ":" +
                        format_date(doc.fit.train_end) + " is outside the dataset");
    }
}

json to_json(const model::SimulationTrace& trace, const std::vector<std::string>& node_ids) {
    json nodes = json::array();
    for (std::size_t n = 0; n < node_ids.size(); ++n) {
        json series{{"S", json::array()}, {"U", json::array()}, {"A", json::array()},
                    {"C", json::array()}, {"D", json::array()}, {"R2", json::array()}};
        for (const auto& s : trace.states) {
            const auto& x = s.nodes[n];
            series["S"].push_back(x.s);
            series["U"].push_back(x.u);
            series["A"].push_back(x.a);
            series["C"].push_back(x.c);
            series["D"].push_back(x.d);
            series["R2"].push_back(x.r2);
        }
        series["id"] = node_ids[n];
        nodes.push_back(std::move(series));
    }
    return {{"horizon", trace.horizon()},
            {"nodes", nodes},
            {"clamp_events", trace.clamp_events},
            {"max_conservation_residual", trace.max_conservation_residual}};
}

std::string trace_csv(const model::SimulationTrace& trace, const std::vector<std::string>& node_ids) {
    std::ostringstream out;
    out << "day,node,S,U,A,C,D,R2\n";
    for (std::size_t t = 0; t < trace.states.size(); ++t) {
        for (std::size_t n = 0; n < node_ids.size(); ++n) {
            const auto& x = trace.states[t].nodes[n];
            out << t << ',' << node_ids[n] << ',' << format_double(x.s) << ',' << format_double(x.u) << ','
                << format_double(x.a) << ',' << format_double(x.c) << ',' << format_double(x.d) << ','
                << format_double(x.r2) << '\n';
        }
    }
    return out.str();
}

json to_json(const scenario::ScenarioResult& r, const std::vector<std::string>& node_ids) {
    json dates = json::array();
    for (Date d : r.dates) {
        dates.push_back(format_date(d));
    }
    json targets = json::array();
    for (std::size_t n : r.target_nodes) {
        targets.push_back(node_ids.at(n));
    }
    json nodes = json::array();
    for (std::size_t n = 0; n < node_ids.size(); ++n) {
        json series{{"id", node_ids[n]}, {"D", json::array()}, {"C", json::array()}, {"U", json::array()},
                    {"A", json::array()}};
        for (const auto& s : r.trace.states) {
            series["D"].push_back(s.nodes[n].d);
            series["C"].push_back(s.nodes[n].c);
            series["U"].push_back(s.nodes[n].u);
            series["A"].push_back(s.nodes[n].a);
        }
        nodes.push_back(std::move(series));
    }
    return {{"dates", dates}, {"target_nodes", targets}, {"total_D", r.total_d}, {"nodes", nodes}};
}

json to_json(const evaluate::ForecastReport& r) {
    json dates = json::array();
    for (Date d : r.dates) {
        dates.push_back(format_date(d));
    }
    return {{"node", r.node},
            {"dates", dates},
            {"predicted", r.predicted},
            {"observed", r.observed},
            {"pe", r.pe},
            {"mape", optional_number(r.mape)},
            {"rmse", optional_number(r.rmse)}};
}

json to_json(const std::vector<evaluate::ForecastReport>& reports) {
    json out = json::array();
    for (const auto& r : reports) {
        out.push_back(to_json(r));
    }
    return out;
}

std::string forecast_csv(const std::vector<evaluate::ForecastReport>& reports) {
    std::ostringstream out;
    out << "node,date,predicted,observed,pe\n";
    for (const auto& r : reports) {
        for (std::size_t t = 0; t < r.dates.size(); ++t) {
            out << r.node << ',' << format_date(r.dates[t]) << ',' << format_double(r.predicted[t]) << ',';
            if (t < r.observed.size()) {
                out << format_double(r.observed[t]);
            }
            out << ',';
            if (t < r.pe.size()) {
                out << format_double(r.pe[t]);
            }
            out << '\n';
        }
    }
    return out.str();
}

json to_json(const evaluate::Comparison& c) {
    json methods = json::array();
    for (const auto& m : c.results) {
        methods.push_back({{"method", evaluate::method_name(m.method)},
                           {"train_loss", m.train_loss},
                           {"reports", to_json(m.reports)}});
    }
    return {{"train_start", format_date(c.train_start)},
            {"train_end", format_date(c.train_end)},
            {"horizon", c.horizon},
            {"methods", methods}};
}

std::string mape_table_csv(const evaluate::Comparison& c) {
    std::ostringstream out;
    out << "method,node,mape\n";
    for (const auto& m : c.results) {
        for (const auto& r : m.reports) {
            out << evaluate::method_name(m.method) << ',' << r.node << ',' << (r.mape ? fixed(*r.mape, 4) : "")
                << '\n';
        }
    }
    return out.str();
}

std::string rmse_table_csv(const evaluate::Comparison& c) {
    std::ostringstream out;
    out << "method,node,rmse\n";
    for (const auto& m : c.results) {
        for (const auto& r : m.reports) {
            out << evaluate::method_name(m.method) << ',' << r.node << ',' << (r.rmse ? fixed(*r.rmse, 0) : "")
                << '\n';
        }
    }
    return out.str();
}

std::string plot_csv(const std::vector<evaluate::ForecastReport>& reports, const std::string& method) {
    std::ostringstream out;
    for (const auto& r : reports) {
        for (std::size_t t = 0; t < r.dates.size(); ++t) {
            out << format_date(r.dates[t]) << ',' << r.node << ',';
            if (t < r.observed.size()) {
                out << format_double(r.observed[t]);
            }
            out << ',' << format_double(r.predicted[t]) << ',' << method << '\n';
        }
    }
    return "date,node,observed,predicted,method\n" + out.str();
}

std::string plot_csv(const evaluate::Comparison& c) {
    std::string out = "date,node,observed,predicted,method\n";
    for (const auto& m : c.results) {
        const auto part = plot_csv(m.reports, evaluate::method_name(m.method));
        out += part.substr(part.find('\n') + 1);
    }
    return out;
}

json to_json(const policy::OptimizationResult& r, const std::vector<std::string>& node_ids) {
    auto days = [](const Tensor3& x) {
        json out = json::array();
        for (std::size_t t = 0; t < x.days(); ++t) {
            json rows = json::array();
            for (std::size_t n = 0; n < x.rows(); ++n) {
                json row = json::array();
                for (std::size_t m = 0; m < x.cols(); ++m) {
                    row.push_back(x(t, n, m));
                }
                rows.push_back(std::move(row));
            }
            out.push_back(std::move(rows));
        }
        return out;
    };
    return {{"best_objective", r.best_objective},
            {"fitness_history", r.fitness_history},
            {"constraint_residual", r.constraint_residual},
            {"aggregate_error", r.aggregate_error},
            {"repairs", r.repairs},
            {"horizon", r.best_schedule.horizon()},
            {"nodes", node_ids},
            {"best_schedule", {{"gp_in", days(r.best_schedule.gp_in)}, {"gp_out", days(r.best_schedule.gp_out)}}}};
}

std::string schedule_csv(const mobility::MobilitySchedule& s, const std::vector<std::string>& node_ids) {
    std::ostringstream out;
    out << "day,origin,destination,gp_in,gp_out\n";
    const std::size_t M = s.node_count();
    for (std::size_t t = 0; t < s.horizon(); ++t) {
        for (std::size_t o = 0; o < M; ++o) {
            for (std::size_t d = 0; d < M; ++d) {
                if (o == d) {
                    continue;
                }
                out << t << ',' << node_ids[o] << ',' << node_ids[d] << ',' << format_double(s.gp_in(t, d, o)) << ','
                    << format_double(s.gp_out(t, d, o)) << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace saucir::io
