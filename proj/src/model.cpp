#include "saucir/model.hpp"

#include "saucir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saucir::model {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void require_size(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) {
        throw InvalidArgument(std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " +
                              std::to_string(n));
    }
}

/// Applies the post-update constraints: every compartment >= 0 and S <= N.
double clamp_count(double v, double upper, long& clamps) {
    if (v < 0.0) {
        ++clamps;
        return 0.0;
    }
    if (v > upper) {
        ++clamps;
        return upper;
    }
    return v;
}

double conservation_residual(const NetworkState& state, std::span<const double> populations) {
    double compartments = 0.0;
    double total = 0.0;
    for (std::size_t n = 0; n < state.nodes.size(); ++n) {
        const auto& x = state.nodes[n];
        compartments += x.s + x.u + x.a + x.d + x.r2;
        total += populations[n];
    }
    return std::abs(compartments - total);
}

}  // namespace

EpidemicParams EpidemicParams::uniform(std::size_t nodes, const NodeParams& p, double theta) {
    EpidemicParams out;
    out.alpha0.assign(nodes, p.alpha0);
    out.tau.assign(nodes, p.tau);
    out.zeta.assign(nodes, p.zeta);
    out.beta.assign(nodes, p.beta);
    out.quarantine.assign(nodes, p.quarantine);
    out.theta = theta;
    return out;
}

void EpidemicParams::set_node(std::size_t n, const NodeParams& p) {
    alpha0[n] = p.alpha0;
    tau[n] = p.tau;
    zeta[n] = p.zeta;
    beta[n] = p.beta;
    quarantine[n] = p.quarantine;
}

std::vector<std::string> EpidemicParams::validate() const {
    const std::size_t M = alpha0.size();
    require_size(tau, M, "tau");
    require_size(zeta, M, "zeta");
    require_size(beta, M, "beta");
    require_size(quarantine, M, "quarantine");
    for (std::size_t n = 0; n < M; ++n) {
        const std::string at = " at node " + std::to_string(n);
        if (!(alpha0[n] >= 0.0) || !std::isfinite(alpha0[n])) {
            throw InvalidArgument("alpha0 must be finite and >= 0" + at);
        }
        if (!(tau[n] >= 0.0) || !std::isfinite(tau[n])) {
            throw InvalidArgument("tau must be finite and >= 0" + at);
        }
        if (!in_unit(zeta[n])) {
            throw InvalidArgument("zeta must lie in [0, 1]" + at);
        }
        if (!in_unit(beta[n])) {
            throw InvalidArgument("beta must lie in [0, 1]" + at);
        }
        if (!in_unit(quarantine[n])) {
            throw InvalidArgument("quarantine must lie in [0, 1]" + at);
        }
    }
    if (!(theta >= 0.0 && theta < 1.0)) {
        throw InvalidArgument("theta must lie in [0, 1)");
    }
    if (incubation_lag < 3 || incubation_lag > 7) {
        throw InvalidArgument("incubation_lag must lie in [3, 7]");
    }
    if (asymptomatic_lag < 6 || asymptomatic_lag > 21) {
        throw InvalidArgument("asymptomatic_lag must lie in [6, 21]");
    }
    std::vector<std::string> warnings;
    if (incubation_lag > 5) {
        warnings.push_back("incubation_lag " + std::to_string(incubation_lag) + " is outside the validated range [3, 5]");
    }
    if (asymptomatic_lag < 9) {
        warnings.push_back("asymptomatic_lag " + std::to_string(asymptomatic_lag) +
                           " is outside the validated range [9, 21]");
    }
    return warnings;
}

void DelayLine::push(double v) {
    if (buf_.empty()) {
        return;
    }
    buf_[head_] = v;
    head_ = (head_ + 1) % buf_.size();
}

double DelayLine::ago(std::size_t lag) const {
    if (lag == 0 || lag > buf_.size()) {
        throw InvalidArgument("delay lookup outside history window");
    }
    return buf_[(head_ + buf_.size() - lag) % buf_.size()];
}

std::vector<double> DelayLine::values() const {
    std::vector<double> out;
    out.reserve(buf_.size());
    for (std::size_t k = 0; k < buf_.size(); ++k) {
        out.push_back(buf_[(head_ + k) % buf_.size()]);
    }
    return out;
}

NetworkState NetworkState::with_empty_history(std::vector<NodeState> nodes, int incubation_lag, int asymptomatic_lag) {
    NetworkState s;
    const std::size_t M = nodes.size();
    s.nodes = std::move(nodes);
    s.u_history.assign(M, DelayLine(static_cast<std::size_t>(incubation_lag)));
    s.a_history.assign(M, DelayLine(static_cast<std::size_t>(asymptomatic_lag)));
    return s;
}

double transmission_rate(double alpha0, double tau, int t) { return alpha0 * std::exp(-tau * t); }

NodeDelta local_deltas(const NodeState& x, const NodeParams& p, double theta, int t, double delayed_u, double delayed_a,
                       double population) {
    const double infections =
        (1.0 - p.quarantine) * transmission_rate(p.alpha0, p.tau, t) * (x.u + x.a) * x.s / population;
    NodeDelta d;
    d.s = -infections;
    d.u = infections * (1.0 - theta) - p.zeta * delayed_u;
    d.a = infections * theta - delayed_a;
    d.d = p.zeta * delayed_u;
    d.c = p.zeta * delayed_u - p.beta * x.c;
    d.r2 = delayed_a;
    return d;
}

std::vector<MigrationDelta> migration_deltas(std::span<const NodeState> states, std::span<const double> populations,
                                             const EpidemicParams& params, const Matrix& gp_in,
                                             const Matrix& gp_out, int t) {
    const std::size_t M = states.size();
    std::vector<double> travel_infections(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double alpha = params.migration_uses_decayed_alpha
                                 ? transmission_rate(params.alpha0[m], params.tau[m], t)
                                 : params.alpha0[m];
        travel_infections[m] = alpha * (states[m].u + states[m].a) * states[m].s / populations[m];
    }
    std::vector<MigrationDelta> out(M);
    for (std::size_t n = 0; n < M; ++n) {
        const double open = 1.0 - params.quarantine[n];
        auto& dn = out[n];
        for (std::size_t m = 0; m < M; ++m) {
            if (m == n) {
                continue;
            }
            const double in = gp_in(n, m);
            const double leave = gp_out(m, n);
            dn.s += in * states[m].s - in * open * travel_infections[m] - leave * states[n].s;
            dn.u += in * open * states[m].u + in * open * (1.0 - params.theta) * travel_infections[m] -
                    leave * open * states[n].u;
            dn.a += in * open * states[m].a + in * open * params.theta * travel_infections[m] -
                    leave * open * states[n].a;
        }
    }
    return out;
}

void check_state(const NetworkState& state, const EpidemicParams& params, std::span<const double> populations) {
    const std::size_t M = params.node_count();
    if (state.nodes.size() != M || populations.size() != M) {
        throw InvalidArgument("state, parameters and populations disagree on the node count");
    }
    if (state.u_history.size() != M || state.a_history.size() != M) {
        throw InvalidArgument("history rings do not match the node count");
    }
    for (std::size_t n = 0; n < M; ++n) {
        if (!(populations[n] > 0.0)) {
            throw InvalidArgument("population of node " + std::to_string(n) + " must be positive");
        }
        if (state.u_history[n].size() != static_cast<std::size_t>(params.incubation_lag) ||
            state.a_history[n].size() != static_cast<std::size_t>(params.asymptomatic_lag)) {
            throw InvalidArgument("history ring length differs from the configured lag at node " + std::to_string(n));
        }
        const auto& x = state.nodes[n];
        for (double v : {x.s, x.u, x.a, x.c, x.d, x.r2}) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw InvalidArgument("negative or non-finite compartment at node " + std::to_string(n));
            }
        }
        for (const auto* ring : {&state.u_history[n], &state.a_history[n]}) {
            for (double v : ring->values()) {
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw InvalidArgument("negative or non-finite history entry at node " + std::to_string(n));
                }
            }
        }
    }
}

NetworkState step(const NetworkState& state, const EpidemicParams& params, std::span<const double> populations,
                  const Matrix& gp_in_day, const Matrix& gp_out_day, long* clamp_events) {
    const std::size_t M = state.nodes.size();
    const auto migration = migration_deltas(state.nodes, populations, params, gp_in_day, gp_out_day, state.day);

    NetworkState next = state;
    long clamps = 0;
    for (std::size_t n = 0; n < M; ++n) {
        const auto& x = state.nodes[n];
        const auto local = local_deltas(x, params.node(n), params.theta, state.day, state.u_history[n].oldest(),
                                        state.a_history[n].oldest(), populations[n]);
        const auto& mig = migration[n];
        const NodeState raw{x.s + local.s + mig.s, x.u + local.u + mig.u, x.a + local.a + mig.a,
                            x.c + local.c,         x.d + local.d,         x.r2 + local.r2};
        const std::pair<const char*, double> checks[] = {{"S", raw.s}, {"U", raw.u}, {"A", raw.a},
                                                         {"C", raw.c}, {"D", raw.d}, {"R2", raw.r2}};
        for (const auto& [name, v] : checks) {
            if (!std::isfinite(v)) {
                throw SimulationError(n, name, state.day + 1);
            }
        }
        constexpr double inf = std::numeric_limits<double>::infinity();
        auto& y = next.nodes[n];
        y.s = clamp_count(raw.s, populations[n], clamps);
        y.u = clamp_count(raw.u, inf, clamps);
        y.a = clamp_count(raw.a, inf, clamps);
        y.c = clamp_count(raw.c, inf, clamps);
        y.d = clamp_count(raw.d, inf, clamps);
        y.r2 = clamp_count(raw.r2, inf, clamps);

        next.u_history[n].push(x.u);
        next.a_history[n].push(x.a);
    }
    next.day = state.day + 1;
    if (clamp_events) {
        *clamp_events += clamps;
    }
    return next;
}

SimulationTrace simulate(const NetworkState& initial, const EpidemicParams& params,
                         std::span<const double> populations, const mobility::MobilitySchedule& schedule,
                         int horizon) {
    params.validate();
    check_state(initial, params, populations);
    if (horizon < 0) {
        throw InvalidArgument("horizon must be non-negative");
    }
    if (static_cast<std::size_t>(horizon) > schedule.horizon()) {
        throw InvalidArgument("horizon " + std::to_string(horizon) + " exceeds the mobility schedule (" +
                              std::to_string(schedule.horizon()) + " days)");
    }
    if (horizon > 0 && schedule.node_count() != params.node_count()) {
        throw InvalidArgument("mobility schedule node count differs from the parameters");
    }

    SimulationTrace trace;
    trace.params_used = params;
    trace.schedule_used = schedule;
    trace.states.reserve(static_cast<std::size_t>(horizon) + 1);
    trace.states.push_back(initial);
    trace.max_conservation_residual = conservation_residual(initial, populations);
    for (int t = 0; t < horizon; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        trace.states.push_back(step(trace.states.back(), params, populations, schedule.gp_in.day(tt),
                                    schedule.gp_out.day(tt), &trace.clamp_events));
        trace.max_conservation_residual =
            std::max(trace.max_conservation_residual, conservation_residual(trace.states.back(), populations));
    }
    return trace;
}

SimulationTrace simulate_saucir_minus_m(const NetworkState& initial, const EpidemicParams& params,
                                        std::span<const double> populations, int horizon) {
    const auto zero = mobility::MobilitySchedule::zeros(static_cast<std::size_t>(std::max(horizon, 0)),
                                                        params.node_count());
    return simulate(initial, params, populations, zero, horizon);
}

// --- Baseline SIR -----------------------------------------------------------

SirParams SirParams::uniform(std::size_t nodes, double alpha, double beta0, double tau) {
    return {std::vector<double>(nodes, alpha), std::vector<double>(nodes, tau), std::vector<double>(nodes, beta0)};
}

namespace {

void check_sir(const SirState& initial, const SirParams& params, std::span<const double> populations, int horizon) {
    const std::size_t M = populations.size();
    if (initial.s.size() != M || initial.i.size() != M || initial.r.size() != M || params.alpha0.size() != M ||
        params.tau.size() != M || params.beta0.size() != M) {
        throw InvalidArgument("SIR state, parameters and populations disagree on the node count");
    }
    if (horizon < 0) {
        throw InvalidArgument("horizon must be non-negative");
    }
    for (std::size_t n = 0; n < M; ++n) {
        if (!(params.alpha0[n] >= 0.0) || !(params.beta0[n] >= 0.0) || !(params.tau[n] >= 0.0)) {
            throw InvalidArgument("SIR rates must be non-negative");
        }
        if (!(populations[n] > 0.0)) {
            throw InvalidArgument("population must be positive");
        }
    }
}

template <typename Coupling>
SirTrace run_sir(const SirState& initial, const SirParams& params, std::span<const double> populations, int horizon,
                 Coupling&& coupling) {
    check_sir(initial, params, populations, horizon);
    const std::size_t M = populations.size();
    SirTrace trace;
    std::vector<double> s = initial.s;
    std::vector<double> i = initial.i;
    std::vector<double> r = initial.r;
    auto record = [&] {
        trace.s.push_back(s);
        trace.i.push_back(i);
        std::vector<double> cum(M);
        for (std::size_t n = 0; n < M; ++n) {
            cum[n] = i[n] + r[n];
        }
        trace.cumulative.push_back(std::move(cum));
    };
    record();
    long unused = 0;
    for (int t = 0; t < horizon; ++t) {
        const auto ds_mig = coupling(s);
        const auto di_mig = coupling(i);
        for (std::size_t n = 0; n < M; ++n) {
            const double alpha = transmission_rate(params.alpha0[n], params.tau[n], t);
            const double infections = alpha * i[n] * s[n] / populations[n];
            const double removals = params.beta0[n] * i[n];
            const double ns = s[n] - infections + ds_mig[n];
            const double ni = i[n] + infections - removals + di_mig[n];
            const double nr = r[n] + removals;
            if (!std::isfinite(ns)) {
                throw SimulationError(n, "S", t + 1);
            }
            if (!std::isfinite(ni)) {
                throw SimulationError(n, "I", t + 1);
            }
            if (!std::isfinite(nr)) {
                throw SimulationError(n, "R", t + 1);
            }
            s[n] = clamp_count(ns, populations[n], unused);
            i[n] = clamp_count(ni, std::numeric_limits<double>::infinity(), unused);
            r[n] = nr;
        }
        record();
    }
    return trace;
}

}  // namespace

SirTrace simulate_sir(const SirState& initial, const SirParams& params, std::span<const double> populations,
                      int horizon) {
    const std::size_t M = populations.size();
    return run_sir(initial, params, populations, horizon,
                   [M](const std::vector<double>&) { return std::vector<double>(M, 0.0); });
}

SirTrace simulate_sir(const SirState& initial, double alpha, double beta0, std::span<const double> populations,
                      int horizon) {
    return simulate_sir(initial, SirParams::uniform(populations.size(), alpha, beta0), populations, horizon);
}

std::vector<double> mobility_coupling(std::span<const double> x, double gamma, const Matrix& p_in,
                                      const Matrix& p_out) {
    const std::size_t M = x.size();
    std::vector<double> out(M, 0.0);
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            if (m == n) {
                continue;
            }
            out[n] += gamma * (p_in(n, m) * x[m] - p_out(m, n) * x[n]);
        }
    }
    return out;
}

SirTrace simulate_sir_m(const SirState& initial, const SirParams& params, std::span<const double> populations,
                        double gamma, const Matrix& p_in, const Matrix& p_out, int horizon) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma must be finite and non-negative");
    }
    const std::size_t M = populations.size();
    if (p_in.rows() != M || p_in.cols() != M || p_out.rows() != M || p_out.cols() != M) {
        throw InvalidArgument("mobility share matrices do not match the node count");
    }
    return run_sir(initial, params, populations, horizon, [&](const std::vector<double>& x) {
        return mobility_coupling(x, gamma, p_in, p_out);
    });
}

}  // namespace saucir::model
