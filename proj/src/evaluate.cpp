#include "saucir/evaluate.hpp"

#include "saucir/errors.hpp"
#include "saucir/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace saucir::evaluate {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> obs, std::size_t min_len) {
    if (pred.size() != obs.size()) {
        throw InvalidArgument("predicted and observed series differ in length (" + std::to_string(pred.size()) +
                              " vs " + std::to_string(obs.size()) + ")");
    }
    if (obs.size() < min_len) {
        throw InvalidArgument("series needs at least " + std::to_string(min_len) + " points");
    }
}

}  // namespace

double percentage_error(double pred, double obs) {
    if (!(obs > 0.0)) {
        throw InvalidArgument("percentage error needs a positive observation");
    }
    return (pred - obs) / obs;
}

double mape(std::span<const double> pred, std::span<const double> obs) {
    check_pair(pred, obs, 1);
    double worst = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
        worst = std::max(worst, std::abs(percentage_error(pred[t], obs[t])));
    }
    return worst;
}

double rmse(std::span<const double> pred, std::span<const double> obs) {
    check_pair(pred, obs, 2);
    double sse = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
        sse += (pred[t] - obs[t]) * (pred[t] - obs[t]);
    }
    return std::sqrt(sse / static_cast<double>(obs.size() - 1));
}

std::vector<ForecastReport> build_reports(const ingest::Dataset& dataset,
                                          const std::vector<std::vector<double>>& paths, Date train_start,
                                          Date train_end, int horizon) {
    if (horizon < 0) {
        throw InvalidArgument("horizon must be non-negative");
    }
    const int offset = days_between(train_start, train_end);
    const auto i_end = dataset.date_index(train_end);
    std::vector<ForecastReport> out;
    for (std::size_t n = 0; n < dataset.node_count(); ++n) {
        ForecastReport r;
        r.node = dataset.nodes[n].id;
        const int first = horizon == 0 ? 0 : 1;
        for (int k = first; k <= horizon; ++k) {
            r.dates.push_back(train_end + std::chrono::days{k});
            r.predicted.push_back(paths[n].at(static_cast<std::size_t>(offset + k)));
        }
        const bool covered =
            i_end && *i_end + static_cast<std::size_t>(horizon) < dataset.day_count();
        if (covered) {
            const auto& d = dataset.series[n].cumulative_confirmed;
            for (int k = first; k <= horizon; ++k) {
                r.observed.push_back(static_cast<double>(d[*i_end + static_cast<std::size_t>(k)]));
            }
            bool positive = std::all_of(r.observed.begin(), r.observed.end(), [](double v) { return v > 0; });
            if (positive) {
                for (std::size_t t = 0; t < r.observed.size(); ++t) {
                    r.pe.push_back(percentage_error(r.predicted[t], r.observed[t]));
                }
                if (horizon >= 1) {
                    r.mape = mape(r.predicted, r.observed);
                }
            }
            if (horizon >= 2) {
                r.rmse = rmse(r.predicted, r.observed);
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ForecastReport> forecast(const calibration::FitResult& fit, const ingest::Dataset& dataset,
                                     const mobility::MobilitySchedule& schedule, int horizon) {
    if (horizon < 0) {
        throw InvalidArgument("horizon must be non-negative");
    }
    const int days = days_between(fit.train_start, fit.train_end) + horizon;
    if (schedule.horizon() < static_cast<std::size_t>(days)) {
        throw InvalidArgument("a " + std::to_string(horizon) + "-day forecast needs mobility flows through " +
                              format_date(fit.train_end + std::chrono::days{horizon - 1}) + ", which the flows do not cover");
    }
    const auto& p = fit.params;
    const auto state = calibration::initial_state(dataset, fit.train_start, p.theta, p.incubation_lag,
                                                  p.asymptomatic_lag, p.zeta);
    const auto trace = model::simulate(state, p, dataset.populations(), schedule, days);
    std::vector<std::vector<double>> paths(dataset.node_count());
    for (const auto& s : trace.states) {
        for (std::size_t n = 0; n < dataset.node_count(); ++n) {
            paths[n].push_back(s.nodes[n].d);
        }
    }
    return build_reports(dataset, paths, fit.train_start, fit.train_end, horizon);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::sir:
            return "SIR";
        case Method::sir_m:
            return "SIR+M";
        case Method::saucir_minus_m:
            return "SaucIR-M";
        case Method::saucir:
            return "SaucIR";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : all_methods()) {
        if (method_name(m) == name) {
            return m;
        }
    }
    throw InvalidArgument("unknown method '" + name + "' (expected SIR, SIR+M, SaucIR-M or SaucIR)");
}

std::vector<Method> all_methods() { return {Method::sir, Method::sir_m, Method::saucir_minus_m, Method::saucir}; }

Comparison compare_models(const ingest::Dataset& dataset, const calibration::FitConfig& config, int horizon,
                          const std::vector<Method>& methods) {
    config.validate();
    if (horizon < 1) {
        throw InvalidArgument("comparison needs a horizon of at least one day");
    }
    const int train_days = config.train_days();
    const auto i_end = dataset.date_index(config.train_end);
    if (!i_end || *i_end + static_cast<std::size_t>(horizon) >= dataset.day_count()) {
        throw DataError("observations do not cover " + std::to_string(horizon) + " days after " +
                        format_date(config.train_end));
    }
    const auto observed = calibration::observed_cumulative(dataset, config.train_start, train_days);
    const int total = train_days - 1 + horizon;

    Comparison out;
    out.train_start = config.train_start;
    out.train_end = config.train_end;
    out.horizon = horizon;
    out.results.resize(methods.size());
    parallel_for(methods.size(), config.threads, [&](std::size_t k) {
        const Method m = methods[k];
        std::unique_ptr<calibration::ModelAdapter> adapter;
        switch (m) {
            case Method::sir:
                adapter = calibration::make_sir_adapter(dataset, config, false);
                break;
            case Method::sir_m:
                adapter = calibration::make_sir_adapter(dataset, config, true);
                break;
            case Method::saucir_minus_m:
                adapter = calibration::make_saucir_adapter(
                    dataset, config, mobility::MobilitySchedule::zeros(0, dataset.node_count()), false);
                break;
            case Method::saucir:
                adapter = calibration::make_saucir_adapter(
                    dataset, config, calibration::window_schedule(dataset, config.train_start, total), true);
                break;
        }
        const auto search =
            calibration::fit_adapter(*adapter, observed, {config.loss, config.max_evals, config.seed, 1});
        const auto paths = adapter->network_path(search.params, total);
        out.results[k] = {m, build_reports(dataset, paths, config.train_start, config.train_end, horizon),
                          search.loss};
    });
    return out;
}

}  // namespace saucir::evaluate
