#include "saucir/scenario.hpp"

#include "saucir/errors.hpp"

#include <cmath>
#include <string>

namespace saucir::scenario {

namespace {

void check_horizon(int horizon) {
    if (horizon < 1 || horizon > kMaxHorizon) {
        throw InvalidArgument("horizon must be between 1 and " + std::to_string(kMaxHorizon) + " days");
    }
}

std::vector<std::size_t> resolve_targets(std::vector<std::size_t> targets, std::size_t M) {
    if (targets.empty()) {
        for (std::size_t n = 0; n < M; ++n) {
            targets.push_back(n);
        }
    }
    for (std::size_t n : targets) {
        if (n >= M) {
            throw InvalidArgument("target node index " + std::to_string(n) + " is outside the network");
        }
    }
    return targets;
}

}  // namespace

mobility::MobilitySchedule extended_schedule(const ingest::Dataset& dataset, Date start, int days) {
    if (days < 0) {
        throw InvalidArgument("schedule length must be non-negative");
    }
    const std::size_t M = dataset.node_count();
    const auto& flows = dataset.flows.flows;
    const std::size_t T = flows.days();
    if (T == 0) {
        throw DataError("the dataset holds no flow days");
    }
    const int offset = days_between(dataset.flows.dates.front(), start);
    if (offset < 0) {
        throw InvalidArgument("schedule start " + format_date(start) + " is before the first flow day");
    }
    Matrix mean(M, M);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t m = 0; m < M; ++m) {
                mean(n, m) += flows(t, n, m) / static_cast<double>(T);
            }
        }
    }
    Tensor3 sub(static_cast<std::size_t>(days), M, M);
    for (std::size_t t = 0; t < static_cast<std::size_t>(days); ++t) {
        const std::size_t src = static_cast<std::size_t>(offset) + t;
        sub.set_day(t, src < T ? flows.day(src) : mean);
    }
    return mobility::schedule_from_flows(sub, dataset.populations());
}

double parse_scale(const std::string& text) {
    if (text == "small") {
        return 1.0;
    }
    if (text == "medium") {
        return 2.0;
    }
    if (text == "large") {
        return 3.0;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("scale must be small, medium, large or a non-negative number, got '" + text + "'");
    }
    return v;
}

ScenarioResult run_scenario(const ingest::Dataset& dataset, const calibration::FitResult& fit,
                            const ScenarioRequest& request) {
    check_horizon(request.horizon);
    const std::size_t M = dataset.node_count();
    auto check_multiplier = [](double v, const std::string& what) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidArgument(what + " must be a non-negative number");
        }
    };
    check_multiplier(request.mobility_multiplier, "mobility_multiplier");
    check_multiplier(request.alpha0_multiplier, "alpha0_multiplier");
    for (const auto& [n, v] : request.node_alpha0_multiplier) {
        if (n >= M) {
            throw InvalidArgument("alpha0 multiplier for unknown node index " + std::to_string(n));
        }
        check_multiplier(v, "alpha0 multiplier");
    }
    for (const auto& [n, v] : request.node_quarantine) {
        if (n >= M) {
            throw InvalidArgument("quarantine override for unknown node index " + std::to_string(n));
        }
    }
    if (request.pair_multiplier) {
        const auto& pm = *request.pair_multiplier;
        if (pm.rows() != M || pm.cols() != M) {
            throw InvalidArgument("mobility multiplier matrix must be " + std::to_string(M) + " x " +
                                  std::to_string(M));
        }
        for (double v : pm.values()) {
            check_multiplier(v, "mobility multiplier matrix entry");
        }
    }

    ScenarioResult out;
    out.target_nodes = resolve_targets(request.target_nodes, M);

    auto params = fit.params;
    if (request.theta) {
        params.theta = *request.theta;
    }
    for (std::size_t n = 0; n < M; ++n) {
        params.alpha0[n] *= request.alpha0_multiplier;
        if (const auto it = request.node_alpha0_multiplier.find(n); it != request.node_alpha0_multiplier.end()) {
            params.alpha0[n] *= it->second;
        }
        if (request.quarantine) {
            params.quarantine[n] = *request.quarantine;
        }
        if (const auto it = request.node_quarantine.find(n); it != request.node_quarantine.end()) {
            params.quarantine[n] = it->second;
        }
    }
    params.validate();

    const int train_steps = days_between(fit.train_start, fit.train_end);
    const auto start = calibration::initial_state(dataset, fit.train_start, fit.params.theta,
                                                  fit.params.incubation_lag, fit.params.asymptomatic_lag,
                                                  fit.params.zeta);
    const auto replay = model::simulate(start, fit.params, dataset.populations(),
                                        extended_schedule(dataset, fit.train_start, train_steps), train_steps);

    auto schedule = extended_schedule(dataset, fit.train_end, request.horizon);
    for (std::size_t t = 0; t < schedule.horizon(); ++t) {
        for (std::size_t d = 0; d < M; ++d) {
            for (std::size_t o = 0; o < M; ++o) {
                const double k =
                    request.mobility_multiplier * (request.pair_multiplier ? (*request.pair_multiplier)(o, d) : 1.0);
                schedule.gp_in(t, d, o) *= k;
                schedule.gp_out(t, d, o) *= k;
            }
        }
    }
    out.trace = model::simulate(replay.states.back(), params, dataset.populations(), schedule, request.horizon);
    for (int k = 0; k <= request.horizon; ++k) {
        out.dates.push_back(fit.train_end + std::chrono::days{k});
    }
    for (std::size_t n : out.target_nodes) {
        out.total_d += out.trace.states.back().nodes[n].d;
    }
    return out;
}

std::vector<evaluate::ForecastReport> run_forecast(const ingest::Dataset& dataset,
                                                   const calibration::FitResult& fit, int horizon) {
    if (horizon < 0) {
        throw InvalidArgument("forecast horizon must be non-negative");
    }
    const int steps = days_between(fit.train_start, fit.train_end) + horizon;
    const Date last = fit.train_end + std::chrono::days{horizon};
    if (dataset.flows.dates.empty() || fit.train_start < dataset.first_date() || last > dataset.last_date()) {
        throw InvalidArgument("forecast up to " + format_date(last) + " needs flows through that day, but the data end on " +
                              (dataset.flows.dates.empty() ? std::string("(no flows)") : format_date(dataset.last_date())));
    }
    return evaluate::forecast(fit, dataset, calibration::window_schedule(dataset, fit.train_start, steps), horizon);
}

policy::Problem optimization_problem(const ingest::Dataset& dataset, const calibration::FitResult& fit, Date start,
                                     int horizon, std::vector<std::size_t> target_nodes, double scale) {
    check_horizon(horizon);
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
        throw InvalidArgument("scale must be a non-negative number");
    }
    policy::Problem p;
    p.params = fit.params;
    p.populations = dataset.populations();
    p.initial = calibration::initial_state(dataset, start, p.params.theta, p.params.incubation_lag,
                                           p.params.asymptomatic_lag, p.params.zeta);
    p.aggregates = mobility::scale_aggregate(mobility::aggregate(extended_schedule(dataset, start, horizon)), scale);
    p.target_nodes = resolve_targets(std::move(target_nodes), dataset.node_count());
    p.horizon = horizon;
    return p;
}

}  // namespace saucir::scenario
