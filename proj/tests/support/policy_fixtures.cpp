#include "policy_fixtures.hpp"

#include "saucir/calibration.hpp"

#include <algorithm>
#include <limits>

namespace saucir::testing {

policy::Problem toy_problem(int horizon, int incubation_lag, double rate) {
    policy::Problem p;
    p.populations = {1e5, 1e5};
    p.params = model::EpidemicParams::uniform(2, {0.5, 0.0, 0.3, 0.05, 0.0}, 0.25);
    p.params.incubation_lag = incubation_lag;
    std::vector<model::NodeState> nodes{{1e5 - 3000, 2000, 500, 300, 500, 0}, {1e5 - 15, 10, 3, 2, 2, 0}};
    p.initial = model::NetworkState::with_empty_history(nodes, incubation_lag, p.params.asymptomatic_lag);
    p.aggregates = {Matrix::square(2), Matrix::square(2), static_cast<std::size_t>(horizon)};
    for (auto* c : {&p.aggregates.c_in, &p.aggregates.c_out}) {
        (*c)(0, 1) = rate;
        (*c)(1, 0) = rate;
    }
    p.target_nodes = {0, 1};
    p.horizon = horizon;
    return p;
}

GridOptimum grid_optimum(const policy::Problem& problem, const std::vector<double>& levels) {
    const std::size_t M = problem.populations.size();
    const auto T = static_cast<std::size_t>(problem.horizon);
    std::vector<std::size_t> slots;  // flat offsets of the free entries
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t n = 0; n < M; ++n) {
                if (m != n) {
                    slots.push_back((t * M + m) * M + n);
                }
            }
        }
    }
    GridOptimum out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
    std::vector<std::size_t> digit(slots.size(), 0);
    policy::Individual ind{Tensor3(T, M, M)};
    while (true) {
        auto w = ind.weights.values();
        for (std::size_t k = 0; k < slots.size(); ++k) {
            w[slots[k]] = levels[digit[k]];
        }
        const double v = -policy::get_fitness(ind, problem);
        out.best = std::min(out.best, v);
        out.worst = std::max(out.worst, v);
        ++out.evaluated;
        std::size_t k = 0;
        while (k < digit.size() && ++digit[k] == levels.size()) {
            digit[k++] = 0;
        }
        if (k == digit.size()) {
            break;
        }
    }
    return out;
}

policy::Problem synthetic_problem(const Synthetic& syn, int horizon, double scale) {
    const auto& ds = syn.dataset;
    policy::Problem p;
    p.params = syn.truth;
    p.populations = ds.populations();
    const Date start = ds.first_date();
    p.initial = calibration::initial_state(ds, start, p.params.theta, p.params.incubation_lag,
                                           p.params.asymptomatic_lag, p.params.zeta);
    p.aggregates = mobility::scale_aggregate(mobility::aggregate(calibration::window_schedule(ds, start, horizon)), scale);
    for (std::size_t n = 0; n < ds.node_count(); ++n) {
        p.target_nodes.push_back(n);
    }
    p.horizon = horizon;
    return p;
}

}  // namespace saucir::testing

namespace saucir::testing {

policy::Problem scale_network(double scale, int horizon) {
    constexpr std::size_t M = 4;
    policy::Problem p;
    p.populations.assign(M, 1e6);
    p.params = model::EpidemicParams::uniform(M, {0.45, 0.03, 0.3, 0.08, 0.0}, 0.25);
    const double infected[M] = {300, 300, 300, 300};
    std::vector<model::NodeState> nodes;
    for (std::size_t n = 0; n < M; ++n) {
        const double u = infected[n];
        const double a = u / 3;
        const double d = 0.1 * p.populations[n];
        nodes.push_back({p.populations[n] - u - a - d, u, a, 0.75 * u, d, 0.0});
    }
    p.initial = model::NetworkState::with_empty_history(nodes, p.params.incubation_lag, p.params.asymptomatic_lag);
    for (std::size_t n = 0; n < M; ++n) {
        p.initial.u_history[n] = model::DelayLine(std::vector<double>(5, 0.2 * infected[n]));
    }
    p.aggregates = {Matrix::square(M), Matrix::square(M), static_cast<std::size_t>(horizon)};
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            if (n != m) {
                // person flow between the pair; equal populations keep c_in = c_out
                const double daily = 0.001 * (1.0 + 0.3 * static_cast<double>((n + m) % 3));
                p.aggregates.c_in(n, m) = daily * horizon * scale;
                p.aggregates.c_out(n, m) = daily * horizon * scale;
            }
        }
    }
    for (std::size_t n = 0; n < M; ++n) {
        p.target_nodes.push_back(n);
    }
    p.horizon = horizon;
    return p;
}

}  // namespace saucir::testing
