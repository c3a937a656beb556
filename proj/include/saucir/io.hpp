#pragma once

// JSON and CSV serialization of engine results. JSON numbers keep full double
// precision; CSV tables use the presentation rounding noted per function.

#include "saucir/calibration.hpp"
#include "saucir/evaluate.hpp"
#include "saucir/ingest.hpp"
#include "saucir/model.hpp"
#include "saucir/policy.hpp"
#include "saucir/scenario.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace saucir::io {

using nlohmann::json;

/// Where a fit's data came from, so forecasts and the service can reload it.
struct DataPaths {
    std::string nodes;
    std::string epidemic;
    std::string flows;       // edge CSV
    std::string flow_scale;  // scaled-flow pair, used when `flows` is empty
    std::string flow_share;

    bool operator==(const DataPaths&) const = default;
};

json to_json(const DataPaths& paths);
DataPaths data_paths_from_json(const json& j);

/// Reads nodes, epidemic and flows; flows are limited to the epidemic's dates.
ingest::Dataset load_dataset(const DataPaths& paths);

/// A fit together with its node ids and data provenance.
struct FitDocument {
    calibration::FitResult fit;
    std::vector<std::string> node_ids;
    DataPaths data;
    calibration::FitConfig config;
};

json to_json(const FitDocument& doc);
/// Throws DataError on a malformed document.
FitDocument fit_from_json(const json& j);

/// Checks that a fit's node ids match the dataset, in order.
void check_fit_matches(const FitDocument& doc, const ingest::Dataset& dataset);

json to_json(const model::SimulationTrace& trace, const std::vector<std::string>& node_ids);
/// `day,node,S,U,A,C,D,R2`
std::string trace_csv(const model::SimulationTrace& trace, const std::vector<std::string>& node_ids);

/// Dates, per-node D, C, U and A series, and total_D over the targets.
json to_json(const scenario::ScenarioResult& result, const std::vector<std::string>& node_ids);

json to_json(const evaluate::ForecastReport& report);
json to_json(const std::vector<evaluate::ForecastReport>& reports);
/// `node,date,predicted,observed,pe`
std::string forecast_csv(const std::vector<evaluate::ForecastReport>& reports);

json to_json(const evaluate::Comparison& comparison);
/// `method,node,mape` with four decimals.
std::string mape_table_csv(const evaluate::Comparison& comparison);
/// `method,node,rmse` rounded to whole cases.
std::string rmse_table_csv(const evaluate::Comparison& comparison);
/// `date,node,observed,predicted,method`; observed is empty past the data.
std::string plot_csv(const evaluate::Comparison& comparison);
std::string plot_csv(const std::vector<evaluate::ForecastReport>& reports, const std::string& method);

/// best_schedule holds gp_in and gp_out as [day][destination][origin].
json to_json(const policy::OptimizationResult& result, const std::vector<std::string>& node_ids);
/// `day,origin,destination,gp_in,gp_out`; gp_in(t, m, n) feeds m from n and
/// gp_out(t, m, n) drains n towards m, both listed under origin n and
/// destination m.
std::string schedule_csv(const mobility::MobilitySchedule& schedule, const std::vector<std::string>& node_ids);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& content);

}  // namespace saucir::io
