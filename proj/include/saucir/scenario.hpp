#pragma once

// What-if runs and optimization problems built from a fitted model.

#include "saucir/calibration.hpp"
#include "saucir/evaluate.hpp"
#include "saucir/ingest.hpp"
#include "saucir/model.hpp"
#include "saucir/policy.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace saucir::scenario {

/// Longest horizon a scenario or optimization may ask for.
inline constexpr int kMaxHorizon = 366;

/// Schedule for `days` steps from `start`: observed flows while the data last,
/// then the mean daily flow over all observed days.
mobility::MobilitySchedule extended_schedule(const ingest::Dataset& dataset, Date start, int days);

/// "small", "medium", "large" (1, 2, 3) or a non-negative number.
double parse_scale(const std::string& text);

struct ScenarioRequest {
    int horizon = 1;
    std::optional<double> theta;
    std::optional<double> quarantine;                 // every node
    std::map<std::size_t, double> node_quarantine;    // wins over `quarantine`
    double alpha0_multiplier = 1.0;                   // every node
    std::map<std::size_t, double> node_alpha0_multiplier;
    double mobility_multiplier = 1.0;
    std::optional<Matrix> pair_multiplier;  // (origin, destination), times mobility_multiplier
    std::vector<std::size_t> target_nodes;  // empty means all
};

struct ScenarioResult {
    std::vector<Date> dates;  // train_end .. train_end + horizon
    model::SimulationTrace trace;
    std::vector<std::size_t> target_nodes;
    double total_d = 0.0;  // sum of D over the targets on the last day
};

/// Replays the fit over its training window with the observed flows, then
/// runs `horizon` more days from the last training day with the overrides
/// applied. Throws InvalidArgument for bad requests (including parameter
/// invariants) and SimulationError on blow-up.
ScenarioResult run_scenario(const ingest::Dataset& dataset, const calibration::FitResult& fit,
                            const ScenarioRequest& request);

/// Forecast for the `horizon` days after the training window. Throws
/// InvalidArgument when the flows stop before the horizon does.
std::vector<evaluate::ForecastReport> run_forecast(const ingest::Dataset& dataset,
                                                   const calibration::FitResult& fit, int horizon);

/// GA problem over `horizon` days from `start` with the fitted parameters;
/// aggregates come from extended_schedule and are multiplied by `scale`.
policy::Problem optimization_problem(const ingest::Dataset& dataset, const calibration::FitResult& fit, Date start,
                                     int horizon, std::vector<std::size_t> target_nodes, double scale);

}  // namespace saucir::scenario
