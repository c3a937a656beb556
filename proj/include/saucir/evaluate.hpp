#pragma once

#include "saucir/calibration.hpp"
#include "saucir/dates.hpp"
#include "saucir/ingest.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saucir::evaluate {

/// (pred - obs) / obs; throws InvalidArgument when obs <= 0.
double percentage_error(double pred, double obs);

/// Largest |pred - obs| / obs over the series.
double mape(std::span<const double> pred, std::span<const double> obs);

/// sqrt(sum of squared errors / (n - 1)); needs at least two points.
double rmse(std::span<const double> pred, std::span<const double> obs);

struct ForecastReport {
    std::string node;
    std::vector<Date> dates;
    std::vector<double> predicted;
    std::vector<double> observed;  // empty when the data stop before the horizon
    std::vector<double> pe;        // per date, present with observations
    std::optional<double> mape;
    std::optional<double> rmse;
};

/// Builds per-node reports from simulated cumulative paths [node][day] that
/// start on `train_start`. Forecast dates are the `horizon` days after
/// `train_end`; horizon 0 gives a report holding only `train_end` and no
/// metrics.
std::vector<ForecastReport> build_reports(const ingest::Dataset& dataset,
                                          const std::vector<std::vector<double>>& paths, Date train_start,
                                          Date train_end, int horizon);

/// Forecast from fitted SaucIR parameters. `schedule` starts on the training
/// start date and must cover the training window plus the horizon.
std::vector<ForecastReport> forecast(const calibration::FitResult& fit, const ingest::Dataset& dataset,
                                     const mobility::MobilitySchedule& schedule, int horizon);

enum class Method { sir, sir_m, saucir_minus_m, saucir };

std::string method_name(Method m);
Method parse_method(const std::string& name);
std::vector<Method> all_methods();

struct MethodResult {
    Method method;
    std::vector<ForecastReport> reports;
    double train_loss = 0.0;
};

struct Comparison {
    std::vector<MethodResult> results;
    Date train_start{};
    Date train_end{};
    int horizon = 0;
};

/// Fits every requested method on the training window and forecasts the
/// horizon; observations must cover it.
Comparison compare_models(const ingest::Dataset& dataset, const calibration::FitConfig& config, int horizon,
                          const std::vector<Method>& methods = all_methods());

}  // namespace saucir::evaluate
