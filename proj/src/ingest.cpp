#include "saucir/ingest.hpp"

#include "saucir/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace saucir::ingest {

namespace {

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<std::string> split_fields(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && field.empty()) {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    if (quoted) {
        throw DataError("unterminated quoted field", line_no);
    }
    out.push_back(std::move(field));
    for (auto& f : out) {
        const auto first = f.find_first_not_of(" \t");
        const auto last = f.find_last_not_of(" \t");
        f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
    }
    return out;
}

/// Splits raw text into a header and data rows; blank lines are skipped.
std::pair<CsvRow, std::vector<CsvRow>> read_csv(std::string_view raw) {
    std::vector<CsvRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = raw.size();
        }
        std::string_view line = raw.substr(pos, nl - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") {
            line.remove_prefix(3);
        }
        if (line.find_first_not_of(" \t") != std::string_view::npos) {
            rows.push_back({line_no, split_fields(line, line_no)});
        }
        pos = nl + 1;
    }
    if (rows.empty()) {
        throw DataError("missing header row");
    }
    CsvRow header = std::move(rows.front());
    rows.erase(rows.begin());
    return {std::move(header), std::move(rows)};
}

/// Maps header names to column indices; every name must be known and every
/// required name present.
std::unordered_map<std::string, std::size_t> map_columns(const CsvRow& header, const std::vector<std::string>& required,
                                                         const std::vector<std::string>& optional) {
    std::unordered_map<std::string, std::size_t> cols;
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        const auto& name = header.fields[i];
        const bool known = std::find(required.begin(), required.end(), name) != required.end() ||
                           std::find(optional.begin(), optional.end(), name) != optional.end();
        if (!known) {
            throw DataError("unknown column '" + name + "'", header.line);
        }
        if (!cols.emplace(name, i).second) {
            throw DataError("duplicate column '" + name + "'", header.line);
        }
    }
    for (const auto& name : required) {
        if (!cols.contains(name)) {
            throw DataError("missing required column '" + name + "'", header.line);
        }
    }
    return cols;
}

const std::string& field(const CsvRow& row, std::size_t col, std::size_t width) {
    if (row.fields.size() != width) {
        throw DataError("expected " + std::to_string(width) + " fields, found " + std::to_string(row.fields.size()),
                        row.line);
    }
    return row.fields[col];
}

Date parse_date_field(const std::string& text, std::size_t line) {
    auto d = parse_date(text);
    if (!d) {
        throw DataError("malformed date '" + text + "'", line);
    }
    return *d;
}

std::int64_t parse_count(const std::string& text, std::size_t line, const char* what) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError(std::string("malformed ") + what + " '" + text + "'", line);
    }
    if (v < 0) {
        throw DataError(std::string("negative ") + what + " " + text, line);
    }
    return v;
}

double parse_real(const std::string& text, std::size_t line, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw DataError(std::string("malformed ") + what + " '" + text + "'", line);
    }
    return v;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::unordered_map<std::string, std::size_t> index_nodes(const std::vector<NodeMeta>& nodes) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!idx.emplace(nodes[i].id, i).second) {
            throw DataError("duplicate node id '" + nodes[i].id + "'");
        }
    }
    return idx;
}

std::size_t lookup_node(const std::unordered_map<std::string, std::size_t>& idx, const std::string& id,
                        std::size_t line) {
    auto it = idx.find(id);
    if (it == idx.end()) {
        throw DataError("unknown node id '" + id + "'", line);
    }
    return it->second;
}

std::vector<Date> date_axis(Date first, Date last) {
    std::vector<Date> out;
    for (Date d = first; d <= last; d += std::chrono::days{1}) {
        out.push_back(d);
    }
    return out;
}

/// Resolves the tensor date axis from the window or the observed dates.
std::vector<Date> resolve_axis(const std::set<Date>& seen, std::optional<DateWindow> range) {
    if (range) {
        for (Date d : seen) {
            if (d < range->start || d > range->end) {
                throw DataError("flow date " + format_date(d) + " outside window " + format_date(range->start) +
                                ":" + format_date(range->end));
            }
        }
        return date_axis(range->start, range->end);
    }
    if (seen.empty()) {
        return {};
    }
    return date_axis(*seen.begin(), *seen.rbegin());
}

}  // namespace

std::optional<std::size_t> Dataset::date_index(Date date) const {
    if (flows.dates.empty() || date < flows.dates.front() || date > flows.dates.back()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(days_between(flows.dates.front(), date));
}

std::optional<std::size_t> Dataset::node_index(std::string_view id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<double> Dataset::populations() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) {
        out.push_back(static_cast<double>(n.population));
    }
    return out;
}

std::vector<NodeMeta> parse_nodes_csv(std::string_view raw) {
    auto [header, rows] = read_csv(raw);
    auto cols = map_columns(header, {"id", "population"}, {"name"});
    const std::size_t width = header.fields.size();
    std::vector<NodeMeta> out;
    std::set<std::string> seen;
    for (const auto& row : rows) {
        NodeMeta meta;
        meta.id = field(row, cols.at("id"), width);
        if (meta.id.empty()) {
            throw DataError("empty node id", row.line);
        }
        meta.name = cols.contains("name") ? field(row, cols.at("name"), width) : meta.id;
        meta.population = parse_count(field(row, cols.at("population"), width), row.line, "population");
        if (meta.population < 1) {
            throw DataError("population of '" + meta.id + "' must be at least 1", row.line);
        }
        if (!seen.insert(meta.id).second) {
            throw DataError("duplicate node id '" + meta.id + "'", row.line);
        }
        out.push_back(std::move(meta));
    }
    return out;
}

std::string write_nodes_csv(const std::vector<NodeMeta>& nodes) {
    std::ostringstream out;
    out << "id,name,population\n";
    for (const auto& n : nodes) {
        out << n.id << ',' << n.name << ',' << n.population << '\n';
    }
    return out.str();
}

std::vector<EpidemicSeries> parse_epidemic_csv(std::string_view raw) {
    auto [header, rows] = read_csv(raw);
    auto cols = map_columns(header, {"date", "node", "cumulative_confirmed"}, {"cumulative_removed", "quarantine_labeled"});
    const std::size_t width = header.fields.size();
    const bool has_removed = cols.contains("cumulative_removed");
    const bool has_quarantine = cols.contains("quarantine_labeled");

    struct Obs {
        std::size_t line;
        std::int64_t confirmed;
        std::int64_t removed;
        std::int64_t quarantine;
    };
    std::vector<std::string> order;
    std::map<std::string, std::map<Date, Obs>> by_node;

    for (const auto& row : rows) {
        const Date date = parse_date_field(field(row, cols.at("date"), width), row.line);
        const std::string& node = row.fields[cols.at("node")];
        if (node.empty()) {
            throw DataError("empty node id", row.line);
        }
        Obs obs{row.line, parse_count(row.fields[cols.at("cumulative_confirmed")], row.line, "cumulative_confirmed"), 0,
                0};
        if (has_removed) {
            obs.removed = parse_count(row.fields[cols.at("cumulative_removed")], row.line, "cumulative_removed");
            if (obs.removed > obs.confirmed) {
                throw DataError("cumulative_removed exceeds cumulative_confirmed for node '" + node + "'", row.line);
            }
        }
        if (has_quarantine) {
            obs.quarantine = parse_count(row.fields[cols.at("quarantine_labeled")], row.line, "quarantine_labeled");
            if (obs.quarantine > obs.confirmed) {
                throw DataError("quarantine_labeled exceeds cumulative_confirmed for node '" + node + "'", row.line);
            }
        }
        auto [it, fresh] = by_node.try_emplace(node);
        if (fresh) {
            order.push_back(node);
        }
        if (!it->second.emplace(date, obs).second) {
            throw DataError("duplicate row for node '" + node + "' on " + format_date(date), row.line);
        }
    }

    std::vector<EpidemicSeries> out;
    for (const auto& node : order) {
        const auto& obs = by_node.at(node);
        EpidemicSeries s;
        s.node = node;
        if (has_removed) {
            s.cumulative_removed.emplace();
        }
        if (has_quarantine) {
            s.quarantine_labeled.emplace();
        }
        for (const auto& [date, o] : obs) {
            if (!s.dates.empty()) {
                if (date - s.dates.back() != std::chrono::days{1}) {
                    throw DataError("date gap for node '" + node + "' between " + format_date(s.dates.back()) +
                                        " and " + format_date(date),
                                    o.line);
                }
                if (o.confirmed < s.cumulative_confirmed.back()) {
                    throw DataError("decreasing cumulative_confirmed for node '" + node + "' on " + format_date(date),
                                    o.line);
                }
            }
            s.dates.push_back(date);
            s.cumulative_confirmed.push_back(o.confirmed);
            if (has_removed) {
                s.cumulative_removed->push_back(o.removed);
            }
            if (has_quarantine) {
                s.quarantine_labeled->push_back(o.quarantine);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string write_epidemic_csv(const std::vector<EpidemicSeries>& series) {
    const bool has_removed = !series.empty() && series.front().cumulative_removed.has_value();
    const bool has_quarantine = !series.empty() && series.front().quarantine_labeled.has_value();
    std::ostringstream out;
    out << "date,node,cumulative_confirmed";
    if (has_removed) {
        out << ",cumulative_removed";
    }
    if (has_quarantine) {
        out << ",quarantine_labeled";
    }
    out << '\n';
    if (series.empty()) {
        return out.str();
    }
    // Date-major ordering mirrors how daily bulletins are published.
    for (std::size_t t = 0; t < series.front().dates.size(); ++t) {
        for (const auto& s : series) {
            out << format_date(s.dates[t]) << ',' << s.node << ',' << s.cumulative_confirmed[t];
            if (has_removed) {
                out << ',' << s.cumulative_removed->at(t);
            }
            if (has_quarantine) {
                out << ',' << s.quarantine_labeled->at(t);
            }
            out << '\n';
        }
    }
    return out.str();
}

FlowTensor parse_flow_edges(std::string_view raw, const std::vector<NodeMeta>& nodes, std::optional<DateWindow> range) {
    auto [header, rows] = read_csv(raw);
    auto cols = map_columns(header, {"date", "origin", "destination", "flow"}, {});
    const std::size_t width = header.fields.size();
    const auto idx = index_nodes(nodes);

    struct Edge {
        Date date;
        std::size_t origin;
        std::size_t destination;
        double flow;
    };
    std::vector<Edge> edges;
    std::set<Date> seen;
    std::set<std::tuple<Date, std::size_t, std::size_t>> keys;
    for (const auto& row : rows) {
        Edge e{};
        e.date = parse_date_field(field(row, cols.at("date"), width), row.line);
        e.origin = lookup_node(idx, row.fields[cols.at("origin")], row.line);
        e.destination = lookup_node(idx, row.fields[cols.at("destination")], row.line);
        e.flow = parse_real(row.fields[cols.at("flow")], row.line, "flow");
        if (e.flow < 0.0) {
            throw DataError("negative flow " + row.fields[cols.at("flow")], row.line);
        }
        if (e.origin == e.destination) {
            throw DataError("self-flow at node '" + nodes[e.origin].id + "'", row.line);
        }
        if (!keys.emplace(e.date, e.origin, e.destination).second) {
            throw DataError("duplicate edge (" + format_date(e.date) + ", " + nodes[e.origin].id + ", " +
                                nodes[e.destination].id + ")",
                            row.line);
        }
        seen.insert(e.date);
        edges.push_back(e);
    }

    FlowTensor out;
    out.dates = resolve_axis(seen, range);
    for (const auto& n : nodes) {
        out.nodes.push_back(n.id);
    }
    out.flows = Tensor3(out.dates.size(), nodes.size(), nodes.size());
    for (const auto& e : edges) {
        const auto t = static_cast<std::size_t>(days_between(out.dates.front(), e.date));
        out.flows(t, e.destination, e.origin) = e.flow;
    }
    return out;
}

std::string write_flow_edges(const FlowTensor& flows) {
    std::ostringstream out;
    out << "date,origin,destination,flow\n";
    for (std::size_t t = 0; t < flows.dates.size(); ++t) {
        for (std::size_t m = 0; m < flows.nodes.size(); ++m) {
            for (std::size_t n = 0; n < flows.nodes.size(); ++n) {
                if (n == m) {
                    continue;
                }
                const double v = flows.flows(t, n, m);
                if (v != 0.0) {
                    out << format_date(flows.dates[t]) << ',' << flows.nodes[m] << ',' << flows.nodes[n] << ','
                        << format_real(v) << '\n';
                }
            }
        }
    }
    return out.str();
}

FlowTensor parse_flow_scaled(std::string_view raw_scale, std::string_view raw_share, const std::vector<NodeMeta>& nodes,
                             std::optional<DateWindow> range) {
    const auto idx = index_nodes(nodes);
    std::set<Date> seen;

    std::map<std::pair<Date, std::size_t>, double> outflow;
    {
        auto [header, rows] = read_csv(raw_scale);
        auto cols = map_columns(header, {"date", "origin", "outflow_total"}, {});
        const std::size_t width = header.fields.size();
        for (const auto& row : rows) {
            const Date date = parse_date_field(field(row, cols.at("date"), width), row.line);
            const std::size_t origin = lookup_node(idx, row.fields[cols.at("origin")], row.line);
            const double total = parse_real(row.fields[cols.at("outflow_total")], row.line, "outflow_total");
            if (total < 0.0) {
                throw DataError("negative outflow_total", row.line);
            }
            if (!outflow.emplace(std::pair{date, origin}, total).second) {
                throw DataError("duplicate scale row (" + format_date(date) + ", " + nodes[origin].id + ")", row.line);
            }
            seen.insert(date);
        }
    }

    struct Share {
        Date date;
        std::size_t origin;
        std::size_t destination;
        double share;
        std::size_t line;
    };
    std::vector<Share> shares;
    std::map<std::pair<Date, std::size_t>, double> share_sum;
    {
        auto [header, rows] = read_csv(raw_share);
        auto cols = map_columns(header, {"date", "origin", "destination", "share"}, {});
        const std::size_t width = header.fields.size();
        std::set<std::tuple<Date, std::size_t, std::size_t>> keys;
        for (const auto& row : rows) {
            Share s{};
            s.line = row.line;
            s.date = parse_date_field(field(row, cols.at("date"), width), row.line);
            s.origin = lookup_node(idx, row.fields[cols.at("origin")], row.line);
            s.destination = lookup_node(idx, row.fields[cols.at("destination")], row.line);
            s.share = parse_real(row.fields[cols.at("share")], row.line, "share");
            if (s.share < 0.0) {
                throw DataError("negative share", row.line);
            }
            if (s.share > 1.0) {
                throw DataError("share above 1", row.line);
            }
            if (s.origin == s.destination) {
                throw DataError("self-flow at node '" + nodes[s.origin].id + "'", row.line);
            }
            if (!keys.emplace(s.date, s.origin, s.destination).second) {
                throw DataError("duplicate share row", row.line);
            }
            if (!outflow.contains({s.date, s.origin})) {
                throw DataError("no outflow_total for origin '" + nodes[s.origin].id + "' on " + format_date(s.date),
                                row.line);
            }
            share_sum[{s.date, s.origin}] += s.share;
            seen.insert(s.date);
            shares.push_back(s);
        }
    }
    for (const auto& [key, sum] : share_sum) {
        if (sum > 1.0 + 1e-9) {
            throw DataError("shares for origin '" + nodes[key.second].id + "' on " + format_date(key.first) +
                            " sum to " + format_real(sum));
        }
    }

    FlowTensor out;
    out.dates = resolve_axis(seen, range);
    for (const auto& n : nodes) {
        out.nodes.push_back(n.id);
    }
    out.flows = Tensor3(out.dates.size(), nodes.size(), nodes.size());
    // Share remainder below 1 leaves the modeled network and is dropped.
    for (const auto& s : shares) {
        const auto t = static_cast<std::size_t>(days_between(out.dates.front(), s.date));
        out.flows(t, s.destination, s.origin) = outflow.at({s.date, s.origin}) * s.share;
    }
    return out;
}

Dataset validate_dataset(std::vector<EpidemicSeries> series, FlowTensor flows, const std::vector<NodeMeta>& nodes) {
    if (nodes.empty()) {
        throw DataError("dataset has no nodes");
    }
    const auto idx = index_nodes(nodes);
    for (const auto& n : nodes) {
        if (n.population < 1) {
            throw DataError("population of '" + n.id + "' must be at least 1");
        }
    }

    std::set<std::string> node_ids;
    for (const auto& n : nodes) {
        node_ids.insert(n.id);
    }
    std::set<std::string> series_ids;
    for (const auto& s : series) {
        if (!series_ids.insert(s.node).second) {
            throw DataError("duplicate series for node '" + s.node + "'");
        }
    }
    const std::set<std::string> flow_ids(flows.nodes.begin(), flows.nodes.end());
    auto report_mismatch = [&](const std::set<std::string>& other, const char* what) {
        std::vector<std::string> missing;
        std::vector<std::string> extra;
        std::set_difference(node_ids.begin(), node_ids.end(), other.begin(), other.end(), std::back_inserter(missing));
        std::set_difference(other.begin(), other.end(), node_ids.begin(), node_ids.end(), std::back_inserter(extra));
        if (missing.empty() && extra.empty()) {
            return;
        }
        std::string msg = std::string("node-set mismatch in ") + what + ":";
        for (const auto& m : missing) {
            msg += " missing '" + m + "'";
        }
        for (const auto& e : extra) {
            msg += " unexpected '" + e + "'";
        }
        throw DataError(msg);
    };
    report_mismatch(series_ids, "epidemic series");
    report_mismatch(flow_ids, "flows");
    if (flows.nodes.size() != flow_ids.size()) {
        throw DataError("duplicate node id in flows");
    }

    for (const auto& s : series) {
        if (s.dates.empty()) {
            throw DataError("empty series for node '" + s.node + "'");
        }
        if (s.dates.size() != s.cumulative_confirmed.size() ||
            (s.cumulative_removed && s.cumulative_removed->size() != s.dates.size()) ||
            (s.quarantine_labeled && s.quarantine_labeled->size() != s.dates.size())) {
            throw DataError("series for node '" + s.node + "' has misaligned columns");
        }
        for (std::size_t t = 0; t < s.dates.size(); ++t) {
            if (t > 0 && s.dates[t] - s.dates[t - 1] != std::chrono::days{1}) {
                throw DataError("date gap for node '" + s.node + "' before " + format_date(s.dates[t]));
            }
            if (s.cumulative_confirmed[t] < 0 || (t > 0 && s.cumulative_confirmed[t] < s.cumulative_confirmed[t - 1])) {
                throw DataError("decreasing cumulative_confirmed for node '" + s.node + "' on " +
                                format_date(s.dates[t]));
            }
            if (s.quarantine_labeled && ((*s.quarantine_labeled)[t] < 0 ||
                                         (*s.quarantine_labeled)[t] > s.cumulative_confirmed[t])) {
                throw DataError("quarantine_labeled exceeds cumulative_confirmed for node '" + s.node + "' on " +
                                format_date(s.dates[t]));
            }
            if (s.cumulative_removed && ((*s.cumulative_removed)[t] < 0 ||
                                         (*s.cumulative_removed)[t] > s.cumulative_confirmed[t])) {
                throw DataError("cumulative_removed exceeds cumulative_confirmed for node '" + s.node + "' on " +
                                format_date(s.dates[t]));
            }
        }
    }

    const auto& ref = series.front();
    for (const auto& s : series) {
        if (s.dates != ref.dates) {
            throw DataError("date-range mismatch: series '" + s.node + "' covers " + format_date(s.dates.front()) +
                            ":" + format_date(s.dates.back()) + " but series '" + ref.node + "' covers " +
                            format_date(ref.dates.front()) + ":" + format_date(ref.dates.back()));
        }
        if (s.cumulative_removed.has_value() != ref.cumulative_removed.has_value() ||
            s.quarantine_labeled.has_value() != ref.quarantine_labeled.has_value()) {
            throw DataError("optional columns differ between series '" + s.node + "' and '" + ref.node + "'");
        }
    }
    if (flows.dates != ref.dates) {
        const std::string flow_range = flows.dates.empty()
                                           ? std::string("nothing")
                                           : format_date(flows.dates.front()) + ":" + format_date(flows.dates.back());
        throw DataError("date-range mismatch: epidemic series cover " + format_date(ref.dates.front()) + ":" +
                        format_date(ref.dates.back()) + " but flows cover " + flow_range);
    }
    const std::size_t M = nodes.size();
    if (flows.flows.days() != flows.dates.size() || flows.flows.rows() != M || flows.flows.cols() != M) {
        throw DataError("flow tensor shape does not match its axes");
    }
    for (std::size_t t = 0; t < flows.flows.days(); ++t) {
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t m = 0; m < M; ++m) {
                const double v = flows.flows(t, n, m);
                if (!std::isfinite(v) || v < 0.0) {
                    throw DataError("invalid flow into '" + flows.nodes[n] + "' from '" + flows.nodes[m] + "' on " +
                                    format_date(flows.dates[t]));
                }
                if (n == m && v != 0.0) {
                    throw DataError("self-flow at node '" + flows.nodes[n] + "' on " + format_date(flows.dates[t]));
                }
            }
        }
    }

    Dataset out;
    out.nodes = nodes;
    out.series.resize(M);
    for (auto& s : series) {
        const std::size_t i = idx.at(s.node);
        out.series[i] = std::move(s);
    }
    // Reorder the flow tensor onto the node list ordering.
    std::vector<std::size_t> perm(M);
    for (std::size_t k = 0; k < M; ++k) {
        perm[k] = idx.at(flows.nodes[k]);
    }
    out.flows.dates = flows.dates;
    for (const auto& n : nodes) {
        out.flows.nodes.push_back(n.id);
    }
    out.flows.flows = Tensor3(flows.flows.days(), M, M);
    for (std::size_t t = 0; t < flows.flows.days(); ++t) {
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t m = 0; m < M; ++m) {
                out.flows.flows(t, perm[n], perm[m]) = flows.flows(t, n, m);
            }
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace saucir::ingest
