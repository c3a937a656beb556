#pragma once

#include "saucir/dates.hpp"
#include "saucir/grid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace saucir::ingest {

struct NodeMeta {
    std::string id;
    std::string name;
    std::int64_t population = 0;

    bool operator==(const NodeMeta&) const = default;
};

/// Observed daily series for one node. Optional columns stay empty when the
/// source file did not carry them, so "unknown" is distinguishable from zero.
struct EpidemicSeries {
    std::string node;
    std::vector<Date> dates;
    std::vector<std::int64_t> cumulative_confirmed;
    std::optional<std::vector<std::int64_t>> cumulative_removed;
    std::optional<std::vector<std::int64_t>> quarantine_labeled;

    bool operator==(const EpidemicSeries&) const = default;
};

/// Absolute person flows per day; flows(t, n, m) counts people moving from
/// origin m into destination n on dates[t].
struct FlowTensor {
    std::vector<Date> dates;
    std::vector<std::string> nodes;
    Tensor3 flows;

    bool operator==(const FlowTensor&) const = default;
};

struct Dataset {
    std::vector<NodeMeta> nodes;
    std::vector<EpidemicSeries> series;  // aligned with nodes
    FlowTensor flows;                    // nodes and dates aligned with series

    std::size_t node_count() const { return nodes.size(); }
    std::size_t day_count() const { return flows.dates.size(); }
    Date first_date() const { return flows.dates.front(); }
    Date last_date() const { return flows.dates.back(); }

    /// Index of `date` in the shared date axis, or nullopt if out of range.
    std::optional<std::size_t> date_index(Date date) const;
    std::optional<std::size_t> node_index(std::string_view id) const;
    std::vector<double> populations() const;
};

std::vector<NodeMeta> parse_nodes_csv(std::string_view raw);
std::string write_nodes_csv(const std::vector<NodeMeta>& nodes);

std::vector<EpidemicSeries> parse_epidemic_csv(std::string_view raw);
std::string write_epidemic_csv(const std::vector<EpidemicSeries>& series);

/// Parses an edge list into a dense tensor. When `range` is given the tensor
/// spans exactly that window (rows outside it are rejected); otherwise it
/// spans the first through last date seen.
FlowTensor parse_flow_edges(std::string_view raw, const std::vector<NodeMeta>& nodes,
                            std::optional<DateWindow> range = std::nullopt);
std::string write_flow_edges(const FlowTensor& flows);

FlowTensor parse_flow_scaled(std::string_view raw_scale, std::string_view raw_share,
                             const std::vector<NodeMeta>& nodes, std::optional<DateWindow> range = std::nullopt);

Dataset validate_dataset(std::vector<EpidemicSeries> series, FlowTensor flows, const std::vector<NodeMeta>& nodes);

/// Reads a whole file; throws DataError naming the path when unreadable.
std::string read_file(const std::string& path);

}  // namespace saucir::ingest
