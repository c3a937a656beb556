#pragma once

#include "saucir/grid.hpp"
#include "saucir/mobility.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace saucir::model {

/// Rate parameters of a single node.
struct NodeParams {
    double alpha0 = 0.0;      // initial transmission rate, 1/day
    double tau = 0.0;         // exponential decay of the transmission rate, 1/day
    double zeta = 0.0;        // confirmation rate of incubating cases, 1/day
    double beta = 0.0;        // removal rate of confirmed cases, 1/day
    double quarantine = 0.0;  // fraction of cases isolated before transmitting

    bool operator==(const NodeParams&) const = default;
};

struct EpidemicParams {
    std::vector<double> alpha0;
    std::vector<double> tau;
    std::vector<double> zeta;
    std::vector<double> beta;
    std::vector<double> quarantine;
    double theta = 0.25;  // probability an infection is asymptomatic
    int incubation_lag = 5;
    int asymptomatic_lag = 21;
    /// Use alpha_m(t) instead of alpha_m(0) for infections during migration.
    bool migration_uses_decayed_alpha = false;

    static EpidemicParams uniform(std::size_t nodes, const NodeParams& p, double theta = 0.25);

    std::size_t node_count() const { return alpha0.size(); }
    NodeParams node(std::size_t n) const { return {alpha0[n], tau[n], zeta[n], beta[n], quarantine[n]}; }
    void set_node(std::size_t n, const NodeParams& p);

    /// Throws InvalidArgument on a hard violation; returns warnings for lags
    /// outside the empirically validated windows ([3,5] and [9,21]).
    std::vector<std::string> validate() const;

    bool operator==(const EpidemicParams&) const = default;
};

struct NodeState {
    double s = 0.0;   // susceptible
    double u = 0.0;   // symptomatic, not yet confirmed
    double a = 0.0;   // asymptomatic carriers
    double c = 0.0;   // confirmed, under therapy
    double d = 0.0;   // cumulative confirmed
    double r2 = 0.0;  // removed from the asymptomatic segment

    /// Removed from the symptomatic segment; derived, never stored.
    double r1() const { return d - c; }

    bool operator==(const NodeState&) const = default;
};

/// Fixed-length FIFO of past daily values; oldest() is the value `size()` days ago.
class DelayLine {
public:
    DelayLine() = default;
    explicit DelayLine(std::size_t length, double fill = 0.0) : buf_(length, fill) {}
    /// `values` ordered oldest first.
    explicit DelayLine(std::vector<double> values) : buf_(std::move(values)) {}

    std::size_t size() const { return buf_.size(); }
    double oldest() const { return buf_.empty() ? 0.0 : buf_[head_]; }
    void push(double v);
    /// Value `lag` days ago, 1 <= lag <= size().
    double ago(std::size_t lag) const;
    std::vector<double> values() const;

    bool operator==(const DelayLine& o) const { return values() == o.values(); }

private:
    std::vector<double> buf_;
    std::size_t head_ = 0;
};

struct NetworkState {
    int day = 0;
    std::vector<NodeState> nodes;
    std::vector<DelayLine> u_history;
    std::vector<DelayLine> a_history;

    /// Zero histories sized to the given lags.
    static NetworkState with_empty_history(std::vector<NodeState> nodes, int incubation_lag, int asymptomatic_lag);

    bool operator==(const NetworkState&) const = default;
};

struct NodeDelta {
    double s = 0.0;
    double u = 0.0;
    double a = 0.0;
    double c = 0.0;
    double d = 0.0;
    double r2 = 0.0;
};

struct MigrationDelta {
    double s = 0.0;
    double u = 0.0;
    double a = 0.0;
};

struct SimulationTrace {
    std::vector<NetworkState> states;  // day 0 .. horizon
    EpidemicParams params_used;
    mobility::MobilitySchedule schedule_used;
    /// Compartment updates that went negative (or S above N) and were clamped.
    long clamp_events = 0;
    /// Largest |sum of compartments - sum of populations| over the run.
    double max_conservation_residual = 0.0;

    std::size_t horizon() const { return states.empty() ? 0 : states.size() - 1; }
};

double transmission_rate(double alpha0, double tau, int t);

NodeDelta local_deltas(const NodeState& node, const NodeParams& params, double theta, int t, double delayed_u,
                       double delayed_a, double population);

std::vector<MigrationDelta> migration_deltas(std::span<const NodeState> states, std::span<const double> populations,
                                             const EpidemicParams& params, const Matrix& gp_in_day,
                                             const Matrix& gp_out_day, int t = 0);

NetworkState step(const NetworkState& state, const EpidemicParams& params, std::span<const double> populations,
                  const Matrix& gp_in_day, const Matrix& gp_out_day, long* clamp_events = nullptr);

SimulationTrace simulate(const NetworkState& initial, const EpidemicParams& params,
                         std::span<const double> populations, const mobility::MobilitySchedule& schedule, int horizon);

/// SaucIR without mobility: simulate under an all-zero schedule.
SimulationTrace simulate_saucir_minus_m(const NetworkState& initial, const EpidemicParams& params,
                                        std::span<const double> populations, int horizon);

/// Checks shapes and state invariants; throws InvalidArgument.
void check_state(const NetworkState& state, const EpidemicParams& params, std::span<const double> populations);

// --- Baseline SIR models -------------------------------------------------

struct SirParams {
    std::vector<double> alpha0;
    std::vector<double> tau;  // same exponential tilt as SaucIR; zero gives constant alpha
    std::vector<double> beta0;

    static SirParams uniform(std::size_t nodes, double alpha, double beta0, double tau = 0.0);
    std::size_t node_count() const { return alpha0.size(); }
};

struct SirState {
    std::vector<double> s;
    std::vector<double> i;
    std::vector<double> r;
};

/// Trajectories indexed [day][node]; cumulative = I + R.
struct SirTrace {
    std::vector<std::vector<double>> s;
    std::vector<std::vector<double>> i;
    std::vector<std::vector<double>> cumulative;
};

SirTrace simulate_sir(const SirState& initial, const SirParams& params, std::span<const double> populations,
                      int horizon);
SirTrace simulate_sir(const SirState& initial, double alpha, double beta0, std::span<const double> populations,
                      int horizon);

/// gamma * sum_m (P^in_nm x_m - P^out_mn x_n) for every n.
std::vector<double> mobility_coupling(std::span<const double> x, double gamma, const Matrix& p_in,
                                      const Matrix& p_out);

SirTrace simulate_sir_m(const SirState& initial, const SirParams& params, std::span<const double> populations,
                        double gamma, const Matrix& p_in, const Matrix& p_out, int horizon);

}  // namespace saucir::model
