#pragma once

#include "saucir/grid.hpp"
#include "saucir/ingest.hpp"

#include <span>
#include <vector>

namespace saucir::mobility {

/// Per-day mobility factors derived from one flow matrix F (destination x origin).
struct MobilityRates {
    std::vector<double> gamma_in;   // F_{n.} / N_n
    std::vector<double> gamma_out;  // F_{.n} / N_n
    Matrix p_in;                    // p_in(n, m) = F_nm / F_{n.}
    Matrix p_out;                   // p_out(m, n) = F_mn / F_{.n}
};

/// Per-day combined rates. gp_in(t, n, m) = (gamma P)^in_{nm,t} feeds node n
/// from node m; gp_out(t, m, n) = (gamma P)^out_{mn,t} drains node n towards m.
struct MobilitySchedule {
    Tensor3 gp_in;
    Tensor3 gp_out;

    std::size_t horizon() const { return gp_in.days(); }
    std::size_t node_count() const { return gp_in.rows(); }

    static MobilitySchedule zeros(std::size_t horizon, std::size_t nodes) {
        return {Tensor3(horizon, nodes, nodes), Tensor3(horizon, nodes, nodes)};
    }

    bool operator==(const MobilitySchedule&) const = default;
};

/// Per-pair sums of the combined rates over the horizon.
struct AggregateRates {
    Matrix c_in;
    Matrix c_out;
    std::size_t horizon = 0;
};

struct BalanceViolation {
    std::size_t n = 0;
    std::size_t m = 0;
    double inflow_side = 0.0;   // c_in(n, m) * N_n
    double outflow_side = 0.0;  // c_out(n, m) * N_m
};

MobilityRates rates_from_flows(const Matrix& flows_day, std::span<const double> populations);

MobilitySchedule schedule_from_flows(const Tensor3& flows, std::span<const double> populations);
inline MobilitySchedule schedule_from_flows(const ingest::FlowTensor& flows, std::span<const double> populations) {
    return schedule_from_flows(flows.flows, populations);
}

/// Days [first, first + count) of a schedule.
MobilitySchedule slice(const MobilitySchedule& schedule, std::size_t first, std::size_t count);

AggregateRates aggregate(const MobilitySchedule& schedule);

/// Checks C^in_{nm} N_n = C^out_{nm} N_m for every ordered pair n != m.
std::vector<BalanceViolation> check_balance(const AggregateRates& agg, std::span<const double> populations, double tol);

/// Default tolerance for check_balance: 1e-9 * max(N).
double default_balance_tolerance(std::span<const double> populations);

/// Largest |c_in(n,m) N_n - c_out(n,m) N_m| over all pairs.
double balance_residual(const AggregateRates& agg, std::span<const double> populations);

MobilitySchedule scale_schedule(const MobilitySchedule& schedule, double multiplier);
AggregateRates scale_aggregate(const AggregateRates& agg, double multiplier);

}  // namespace saucir::mobility
