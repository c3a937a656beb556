#include "saucir/calibration.hpp"

#include "saucir/errors.hpp"
#include "saucir/parallel.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace saucir::calibration {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// GSL rejects non-finite objective values, so failed candidates report this instead.
constexpr double kRejected = 1e300;

std::size_t require_date(const ingest::Dataset& dataset, Date d) {
    const auto i = dataset.date_index(d);
    if (!i) {
        throw DataError("date " + format_date(d) + " is outside the dataset (" + format_date(dataset.first_date()) +
                        " to " + format_date(dataset.last_date()) + ")");
    }
    return *i;
}

double triangle(double u) {
    double v = std::fmod(std::abs(u), 2.0);
    return v > 1.0 ? 2.0 - v : v;
}

using Objective = std::function<double(std::span<const double>)>;

struct Descent {
    std::vector<double> x;
    double f = kInf;
    int evals = 0;
    bool converged = false;
};

// Bounded Nelder-Mead in unit-cube coordinates folded back into the box, so
// every evaluated point respects the bounds.
class BoxedSimplex {
public:
    BoxedSimplex(const Objective& f, std::vector<Bounds> bounds) : f_(f), bounds_(std::move(bounds)) {}

    std::vector<double> to_box(const double* u) const {
        std::vector<double> x(bounds_.size());
        for (std::size_t i = 0; i < bounds_.size(); ++i) {
            x[i] = bounds_[i].lo + (bounds_[i].hi - bounds_[i].lo) * triangle(u[i]);
        }
        return x;
    }

    std::vector<double> to_unit(std::span<const double> x) const {
        std::vector<double> u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double w = bounds_[i].hi - bounds_[i].lo;
            u[i] = w > 0 ? (bounds_[i].clamp(x[i]) - bounds_[i].lo) / w : 0.0;
        }
        return u;
    }

    double eval(std::span<const double> x) {
        ++evals_;
        double v = kInf;
        try {
            v = f_(x);
        } catch (const SimulationError&) {
            v = kInf;
        }
        return std::isfinite(v) ? v : kRejected;
    }

    // One descent from `start`; stops on simplex size or when `budget` evals are spent.
    Descent run(std::span<const double> start, double step, int budget) {
        const std::size_t d = bounds_.size();
        Descent out;
        out.x.assign(start.begin(), start.end());
        if (budget <= 0) {
            return out;
        }
        const int before = evals_;
        auto u0 = to_unit(start);
        gsl_vector* x = gsl_vector_alloc(d);
        gsl_vector* ss = gsl_vector_alloc(d);
        for (std::size_t i = 0; i < d; ++i) {
            gsl_vector_set(x, i, u0[i]);
            gsl_vector_set(ss, i, step);
        }
        gsl_multimin_function fn;
        fn.n = d;
        fn.params = this;
        fn.f = [](const gsl_vector* v, void* self) {
            auto* me = static_cast<BoxedSimplex*>(self);
            const auto p = me->to_box(v->data);
            return me->eval(p);
        };
        gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d);
        gsl_multimin_fminimizer_set(s, &fn, x, ss);
        while (evals_ - before < budget) {
            if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) {
                break;
            }
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) == GSL_SUCCESS) {
                out.converged = true;
                break;
            }
        }
        out.x = to_box(gsl_multimin_fminimizer_x(s)->data);
        out.f = gsl_multimin_fminimizer_minimum(s);
        gsl_multimin_fminimizer_free(s);
        gsl_vector_free(ss);
        gsl_vector_free(x);
        out.evals = evals_ - before;
        if (out.f >= kRejected) {
            out.f = kInf;
        }
        return out;
    }

    int evals() const { return evals_; }

private:
    const Objective& f_;
    std::vector<Bounds> bounds_;
    int evals_ = 0;
};

struct LocalFit {
    std::vector<double> x;
    double f = kInf;
    int evals = 0;
    bool converged = false;
    std::vector<double> history;
};

// Grid over the box, then simplex descents from the best grid points, then
// restarts from the incumbent until no further gain or the budget runs out.
LocalFit grid_then_descend(const Objective& f, const std::vector<Bounds>& bounds, int budget, std::uint64_t seed) {
    const std::size_t k = bounds.size();
    BoxedSimplex simplex(f, bounds);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.04, 0.04);

    constexpr int levels = 4;
    std::size_t grid_size = 1;
    for (std::size_t i = 0; i < k; ++i) {
        grid_size *= levels;
    }
    std::vector<double> offsets(k * levels);
    for (std::size_t i = 0; i < k; ++i) {
        for (int l = 0; l < levels; ++l) {
            const double base = static_cast<double>(l) / (levels - 1);
            offsets[i * levels + l] = (l == 0 || l == levels - 1) ? base : base + jitter(rng);
        }
    }
    std::vector<std::pair<double, std::vector<double>>> grid;
    grid.reserve(grid_size);
    for (std::size_t g = 0; g < grid_size; ++g) {
        std::vector<double> x(k);
        std::size_t rest = g;
        for (std::size_t i = 0; i < k; ++i) {
            const auto l = rest % levels;
            rest /= levels;
            x[i] = bounds[i].lo + (bounds[i].hi - bounds[i].lo) * offsets[i * levels + l];
        }
        const double v = simplex.eval(x);
        grid.emplace_back(v >= kRejected ? kInf : v, std::move(x));
    }
    std::stable_sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    LocalFit best;
    best.x = grid.front().second;
    best.f = grid.front().first;
    best.history.push_back(best.f);

    const int starts = 3;
    const int per_start = std::max(0, (budget - simplex.evals()) / (starts + 2));
    for (int s = 0; s < starts && s < static_cast<int>(grid.size()); ++s) {
        if (!std::isfinite(grid[static_cast<std::size_t>(s)].first)) {
            break;
        }
        auto d = simplex.run(grid[static_cast<std::size_t>(s)].second, 0.15, per_start);
        if (d.f < best.f) {
            best.x = d.x;
            best.f = d.f;
        }
        best.converged = d.converged;
        best.history.push_back(best.f);
    }
    // restarts around the incumbent
    for (int r = 0; r < 6 && std::isfinite(best.f) && simplex.evals() < budget; ++r) {
        auto d = simplex.run(best.x, 0.02, budget - simplex.evals());
        const bool gained = d.f < best.f * (1.0 - 1e-10) && d.f < best.f;
        if (d.f < best.f) {
            best.x = d.x;
            best.f = d.f;
        }
        best.converged = d.converged;
        best.history.push_back(best.f);
        if (!gained) {
            break;
        }
    }
    best.evals = simplex.evals();
    return best;
}

double network_loss(const std::vector<std::vector<double>>& sim, const std::vector<std::vector<double>>& obs,
                    LossKind kind) {
    double total = 0.0;
    for (std::size_t n = 0; n < obs.size(); ++n) {
        total += series_loss(sim[n], obs[n], kind);
    }
    return total;
}

// --- SaucIR adapter -----------------------------------------------------------

class SaucirAdapter final : public ModelAdapter {
public:
    SaucirAdapter(const ingest::Dataset& dataset, const FitConfig& config, mobility::MobilitySchedule schedule,
                  bool with_mobility)
        : schedule_(std::move(schedule)), with_mobility_(with_mobility) {
        populations_ = dataset.populations();
        base_ = initial_state(dataset, config.train_start, config.theta, config.incubation_lag,
                              config.asymptomatic_lag);
        const auto i0 = require_date(dataset, config.train_start);
        const auto lag = static_cast<std::size_t>(config.incubation_lag);
        new_cases_.resize(dataset.node_count());
        for (std::size_t n = 0; n < dataset.node_count(); ++n) {
            const auto& d = dataset.series[n].cumulative_confirmed;
            for (std::size_t j = 0; j < lag; ++j) {
                new_cases_[n].push_back(static_cast<double>(d[i0 + j + 1] - d[i0 + j]));
            }
        }
        quarantine_ = config.quarantine.empty() ? quarantine_rates(dataset) : config.quarantine;
        bounds_ = {config.alpha0, config.tau, config.zeta};
        theta_ = config.theta;
        incubation_lag_ = config.incubation_lag;
        asymptomatic_lag_ = config.asymptomatic_lag;
    }

    std::size_t node_count() const override { return populations_.size(); }
    std::vector<Bounds> bounds() const override { return bounds_; }
    bool coupled() const override { return with_mobility_ && node_count() > 1; }

    std::vector<double> isolated_path(std::size_t n, std::span<const double> p, int days) const override {
        model::EpidemicParams params = params_for({std::vector<double>(p.begin(), p.end())}, {n});
        model::NetworkState state;
        state.nodes = {base_.nodes[n]};
        state.u_history = {history_for(n, p[2])};
        state.a_history = {base_.a_history[n]};
        const std::vector<double> pop{populations_[n]};
        const auto trace = model::simulate_saucir_minus_m(state, params, pop, days);
        std::vector<double> out;
        out.reserve(trace.states.size());
        for (const auto& s : trace.states) {
            out.push_back(s.nodes[0].d);
        }
        return out;
    }

    std::vector<std::vector<double>> network_path(const std::vector<std::vector<double>>& p,
                                                  int days) const override {
        std::vector<std::size_t> all(node_count());
        std::iota(all.begin(), all.end(), std::size_t{0});
        const auto params = params_for(p, all);
        auto state = base_;
        for (std::size_t n = 0; n < node_count(); ++n) {
            state.u_history[n] = history_for(n, p[n][2]);
        }
        const auto trace = with_mobility_
                               ? model::simulate(state, params, populations_, schedule_, days)
                               : model::simulate_saucir_minus_m(state, params, populations_, days);
        std::vector<std::vector<double>> out(node_count());
        for (const auto& s : trace.states) {
            for (std::size_t n = 0; n < node_count(); ++n) {
                out[n].push_back(s.nodes[n].d);
            }
        }
        return out;
    }

private:
    model::EpidemicParams params_for(const std::vector<std::vector<double>>& p,
                                     const std::vector<std::size_t>& nodes) const {
        model::EpidemicParams params;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            params.alpha0.push_back(p[i][0]);
            params.tau.push_back(p[i][1]);
            params.zeta.push_back(p[i][2]);
            params.beta.push_back(0.0);
            params.quarantine.push_back(quarantine_[nodes[i]]);
        }
        params.theta = theta_;
        params.incubation_lag = incubation_lag_;
        params.asymptomatic_lag = asymptomatic_lag_;
        return params;
    }

    model::DelayLine history_for(std::size_t n, double zeta) const {
        if (!(zeta > 0.0)) {
            return model::DelayLine(new_cases_[n].size());
        }
        std::vector<double> v = new_cases_[n];
        for (double& x : v) {
            x /= zeta;
        }
        return model::DelayLine(std::move(v));
    }

    mobility::MobilitySchedule schedule_;
    bool with_mobility_;
    std::vector<double> populations_;
    model::NetworkState base_;
    std::vector<std::vector<double>> new_cases_;
    std::vector<double> quarantine_;
    std::vector<Bounds> bounds_;
    double theta_ = 0.25;
    int incubation_lag_ = 5;
    int asymptomatic_lag_ = 21;
};

// --- SIR adapter --------------------------------------------------------------

class SirAdapter final : public ModelAdapter {
public:
    SirAdapter(const ingest::Dataset& dataset, const FitConfig& config, bool with_mobility)
        : with_mobility_(with_mobility) {
        populations_ = dataset.populations();
        initial_ = sir_initial_state(dataset, config.train_start);
        bounds_ = {config.alpha0, config.tau, config.beta};
        if (with_mobility) {
            mobility_ = mean_mobility(dataset, config.train_start, config.train_days());
        }
    }

    std::size_t node_count() const override { return populations_.size(); }
    std::vector<Bounds> bounds() const override { return bounds_; }
    bool coupled() const override { return with_mobility_ && mobility_.gamma > 0.0 && node_count() > 1; }

    std::vector<double> isolated_path(std::size_t n, std::span<const double> p, int days) const override {
        const model::SirState s{{initial_.s[n]}, {initial_.i[n]}, {initial_.r[n]}};
        const model::SirParams params{{p[0]}, {p[1]}, {p[2]}};
        const std::vector<double> pop{populations_[n]};
        const auto trace = model::simulate_sir(s, params, pop, days);
        std::vector<double> out;
        for (const auto& row : trace.cumulative) {
            out.push_back(row[0]);
        }
        return out;
    }

    std::vector<std::vector<double>> network_path(const std::vector<std::vector<double>>& p,
                                                  int days) const override {
        model::SirParams params;
        for (const auto& q : p) {
            params.alpha0.push_back(q[0]);
            params.tau.push_back(q[1]);
            params.beta0.push_back(q[2]);
        }
        const auto trace = coupled() ? model::simulate_sir_m(initial_, params, populations_, mobility_.gamma,
                                                             mobility_.p_in, mobility_.p_out, days)
                                     : model::simulate_sir(initial_, params, populations_, days);
        std::vector<std::vector<double>> out(node_count());
        for (const auto& row : trace.cumulative) {
            for (std::size_t n = 0; n < node_count(); ++n) {
                out[n].push_back(row[n]);
            }
        }
        return out;
    }

private:
    bool with_mobility_;
    std::vector<double> populations_;
    model::SirState initial_;
    std::vector<Bounds> bounds_;
    MeanMobility mobility_;
};

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::cumulative ? "cumulative" : "daily"; }

LossKind parse_loss_kind(const std::string& text) {
    if (text == "cumulative") {
        return LossKind::cumulative;
    }
    if (text == "daily") {
        return LossKind::daily;
    }
    throw InvalidArgument("unknown loss '" + text + "' (expected cumulative or daily)");
}

void FitConfig::validate() const {
    for (const auto& [name, b] : {std::pair{"alpha0", alpha0}, {"tau", tau}, {"zeta", zeta}, {"beta", beta}}) {
        if (!(b.lo <= b.hi) || b.lo < 0.0 || !std::isfinite(b.hi)) {
            throw InvalidArgument(std::string("bounds for ") + name + " must satisfy 0 <= lo <= hi");
        }
    }
    if (zeta.hi > 1.0 || beta.hi > 1.0) {
        throw InvalidArgument("zeta and beta bounds must lie within [0, 1]");
    }
    if (!(theta >= 0.0 && theta < 1.0)) {
        throw InvalidArgument("theta must lie in [0, 1)");
    }
    if (incubation_lag < 3 || incubation_lag > 7 || asymptomatic_lag < 6 || asymptomatic_lag > 21) {
        throw InvalidArgument("lags outside the supported range");
    }
    if (train_days() < incubation_lag + 7) {
        throw InvalidArgument("training window must span at least incubation_lag + 7 = " +
                              std::to_string(incubation_lag + 7) + " days, got " + std::to_string(train_days()));
    }
    if (max_evals < 1) {
        throw InvalidArgument("max_evals must be positive");
    }
    for (double l : quarantine) {
        if (!(l >= 0.0 && l <= 1.0)) {
            throw InvalidArgument("quarantine rates must lie in [0, 1]");
        }
    }
}

double estimate_quarantine_rate(const ingest::EpidemicSeries& series) {
    if (!series.quarantine_labeled) {
        throw DataError("node " + series.node + " has no quarantine-labeled counts");
    }
    if (series.cumulative_confirmed.empty() || series.cumulative_confirmed.back() == 0) {
        return 0.0;
    }
    return static_cast<double>(series.quarantine_labeled->back()) /
           static_cast<double>(series.cumulative_confirmed.back());
}

std::vector<double> quarantine_rates(const ingest::Dataset& dataset) {
    std::vector<double> out;
    for (const auto& s : dataset.series) {
        out.push_back(s.quarantine_labeled ? estimate_quarantine_rate(s) : 0.0);
    }
    return out;
}

model::NetworkState initial_state(const ingest::Dataset& dataset, Date start, double theta, int incubation_lag,
                                  int asymptomatic_lag, std::span<const double> zeta) {
    if (!(theta >= 0.0 && theta < 1.0)) {
        throw InvalidArgument("theta must lie in [0, 1)");
    }
    if (incubation_lag < 1 || asymptomatic_lag < 1) {
        throw InvalidArgument("lags must be positive");
    }
    const std::size_t M = dataset.node_count();
    if (!zeta.empty() && zeta.size() != M) {
        throw InvalidArgument("zeta must have one entry per node");
    }
    const auto i0 = require_date(dataset, start);
    const std::size_t ahead = std::max<std::size_t>(6, static_cast<std::size_t>(incubation_lag));
    if (i0 + ahead >= dataset.day_count()) {
        throw DataError("insufficient future data: initialization on " + format_date(start) + " needs " +
                        std::to_string(ahead) + " observed days after it");
    }
    const auto populations = dataset.populations();
    std::vector<model::NodeState> nodes(M);
    for (std::size_t n = 0; n < M; ++n) {
        const auto& s = dataset.series[n];
        const auto& d = s.cumulative_confirmed;
        auto& x = nodes[n];
        x.s = populations[n];
        x.d = static_cast<double>(d[i0]);
        x.u = static_cast<double>(d[i0 + 6] - d[i0]);
        x.a = x.u * theta / (1.0 - theta);
        x.c = s.cumulative_removed ? x.d - static_cast<double>((*s.cumulative_removed)[i0]) : x.d;
        x.r2 = 0.0;
    }
    auto state = model::NetworkState::with_empty_history(std::move(nodes), incubation_lag, asymptomatic_lag);
    if (!zeta.empty()) {
        for (std::size_t n = 0; n < M; ++n) {
            if (!(zeta[n] > 0.0)) {
                continue;
            }
            const auto& d = dataset.series[n].cumulative_confirmed;
            std::vector<double> h(static_cast<std::size_t>(incubation_lag));
            for (std::size_t j = 0; j < h.size(); ++j) {
                h[j] = static_cast<double>(d[i0 + j + 1] - d[i0 + j]) / zeta[n];
            }
            state.u_history[n] = model::DelayLine(std::move(h));
        }
    }
    return state;
}

mobility::MobilitySchedule window_schedule(const ingest::Dataset& dataset, Date start, int days) {
    if (days < 0) {
        throw InvalidArgument("schedule length must be non-negative");
    }
    const std::size_t M = dataset.node_count();
    const auto i0 = dataset.date_index(start);
    if (days == 0) {
        return mobility::MobilitySchedule::zeros(0, M);
    }
    if (!i0 || *i0 + static_cast<std::size_t>(days) > dataset.flows.flows.days()) {
        throw InvalidArgument("mobility flows do not cover " + std::to_string(days) + " days from " +
                              format_date(start));
    }
    Tensor3 sub(static_cast<std::size_t>(days), M, M);
    for (std::size_t t = 0; t < static_cast<std::size_t>(days); ++t) {
        sub.set_day(t, dataset.flows.flows.day(*i0 + t));
    }
    return mobility::schedule_from_flows(sub, dataset.populations());
}

std::vector<std::vector<double>> observed_cumulative(const ingest::Dataset& dataset, Date start, int days) {
    const auto i0 = require_date(dataset, start);
    if (days < 1 || i0 + static_cast<std::size_t>(days) > dataset.day_count()) {
        throw DataError("observations do not cover " + std::to_string(days) + " days from " + format_date(start));
    }
    std::vector<std::vector<double>> out(dataset.node_count());
    for (std::size_t n = 0; n < dataset.node_count(); ++n) {
        const auto& d = dataset.series[n].cumulative_confirmed;
        for (std::size_t t = 0; t < static_cast<std::size_t>(days); ++t) {
            out[n].push_back(static_cast<double>(d[i0 + t]));
        }
    }
    return out;
}

double series_loss(std::span<const double> simulated, std::span<const double> observed, LossKind kind) {
    if (simulated.size() < observed.size()) {
        throw InvalidArgument("simulated series shorter than the observations");
    }
    double sse = 0.0;
    if (kind == LossKind::cumulative) {
        for (std::size_t t = 0; t < observed.size(); ++t) {
            const double e = simulated[t] - observed[t];
            sse += e * e;
        }
    } else {
        for (std::size_t t = 1; t < observed.size(); ++t) {
            const double e = (simulated[t] - simulated[t - 1]) - (observed[t] - observed[t - 1]);
            sse += e * e;
        }
    }
    return std::isfinite(sse) ? sse : kInf;
}

double fit_loss(const model::EpidemicParams& params, const ingest::Dataset& dataset, const FitConfig& config,
                const mobility::MobilitySchedule& schedule) {
    const int days = config.train_days();
    const auto observed = observed_cumulative(dataset, config.train_start, days);
    const auto state = initial_state(dataset, config.train_start, params.theta, params.incubation_lag,
                                     params.asymptomatic_lag, params.zeta);
    try {
        const auto trace = model::simulate(state, params, dataset.populations(), schedule, days - 1);
        std::vector<std::vector<double>> sim(dataset.node_count());
        for (const auto& s : trace.states) {
            for (std::size_t n = 0; n < dataset.node_count(); ++n) {
                sim[n].push_back(s.nodes[n].d);
            }
        }
        return network_loss(sim, observed, config.loss);
    } catch (const SimulationError&) {
        return kInf;
    }
}

SearchResult fit_adapter(const ModelAdapter& model, const std::vector<std::vector<double>>& observed,
                         const SearchSettings& settings) {
    gsl_set_error_handler_off();
    const std::size_t M = model.node_count();
    if (observed.size() != M || M == 0) {
        throw InvalidArgument("observations do not match the model's node count");
    }
    const int days = static_cast<int>(observed.front().size()) - 1;
    const auto bounds = model.bounds();
    const bool coupled = model.coupled();
    const int node_budget = std::max(1, static_cast<int>((coupled ? 0.2 : 1.0) * settings.max_evals / M));

    std::vector<LocalFit> local(M);
    parallel_for(M, settings.threads, [&](std::size_t n) {
        Objective f = [&, n](std::span<const double> p) {
            return series_loss(model.isolated_path(n, p, days), observed[n], settings.loss);
        };
        local[n] = grid_then_descend(f, bounds, node_budget, settings.seed + 7919 * n);
    });

    SearchResult out;
    out.converged = true;
    for (std::size_t n = 0; n < M; ++n) {
        out.params.push_back(local[n].x);
        out.evals += local[n].evals;
        out.converged = out.converged && local[n].converged;
    }
    if (!coupled) {
        std::size_t rounds = 0;
        for (const auto& l : local) {
            rounds = std::max(rounds, l.history.size());
        }
        for (std::size_t r = 0; r < rounds; ++r) {
            double total = 0.0;
            for (const auto& l : local) {
                total += l.history[std::min(r, l.history.size() - 1)];
            }
            out.history.push_back(total);
        }
        out.loss = out.history.empty() ? kInf : out.history.back();
    } else {
        auto network = [&](const std::vector<std::vector<double>>& p) {
            try {
                return network_loss(model.network_path(p, days), observed, settings.loss);
            } catch (const SimulationError&) {
                return kInf;
            }
        };
        // Conditional passes: each node is refit on its own series with the
        // other nodes frozen at the previous pass, updated together so the
        // result does not depend on thread count.
        for (int pass = 0; pass < 3; ++pass) {
            const auto frozen = out.params;
            std::vector<LocalFit> cond(M);
            parallel_for(M, settings.threads, [&](std::size_t n) {
                Objective f = [&, n](std::span<const double> p) {
                    auto trial = frozen;
                    trial[n].assign(p.begin(), p.end());
                    try {
                        return series_loss(model.network_path(trial, days)[n], observed[n], settings.loss);
                    } catch (const SimulationError&) {
                        return kInf;
                    }
                };
                cond[n] = grid_then_descend(f, bounds, node_budget / 2, settings.seed + 7919 * n + 17 * (pass + 1));
            });
            for (std::size_t n = 0; n < M; ++n) {
                out.params[n] = cond[n].x;
                out.evals += cond[n].evals;
            }
        }
        out.loss = network(out.params);
        ++out.evals;
        out.history.push_back(out.loss);
        int remaining = std::max(0, settings.max_evals - out.evals);
        auto accept = [&](std::size_t n, const std::vector<double>& x, double f) {
            if (f < out.loss) {
                out.params[n] = x;
                out.loss = f;
            }
            out.history.push_back(out.loss);
        };
        // Imports can put a node's uncoupled optimum in the wrong basin, so each
        // node is first re-seeded from the grid under the coupled loss.
        const int reseed_budget = std::max(300, static_cast<int>(0.3 * settings.max_evals / M));
        for (int pass = 0; pass < 3 && remaining > 0; ++pass) {
            const double at_pass_start = out.loss;
            for (std::size_t n = 0; n < M && remaining > 0; ++n) {
                Objective f = [&, n](std::span<const double> p) {
                    auto trial = out.params;
                    trial[n].assign(p.begin(), p.end());
                    return network(trial);
                };
                auto local_fit = grid_then_descend(f, bounds, std::min(reseed_budget, remaining),
                                                   settings.seed + 104729 * n + 31 * static_cast<std::uint64_t>(pass));
                out.evals += local_fit.evals;
                remaining -= local_fit.evals;
                accept(n, local_fit.x, local_fit.f);
            }
            if (!(out.loss < at_pass_start * 0.5)) {
                break;
            }
        }
        const int block_budget = std::max(200, remaining / static_cast<int>(M * 8));
        for (int sweep = 0; sweep < 20 && remaining > 0; ++sweep) {
            const double at_sweep_start = out.loss;
            for (std::size_t n = 0; n < M && remaining > 0; ++n) {
                Objective f = [&, n](std::span<const double> p) {
                    auto trial = out.params;
                    trial[n].assign(p.begin(), p.end());
                    return network(trial);
                };
                BoxedSimplex simplex(f, bounds);
                auto d = simplex.run(out.params[n], 0.05, std::min(block_budget, remaining));
                out.evals += simplex.evals();
                remaining -= simplex.evals();
                accept(n, d.x, d.f);
            }
            if (!(out.loss < at_sweep_start * (1.0 - 1e-4))) {
                break;
            }
        }
        // joint descent over every parameter of every node
        const std::size_t k = bounds.size();
        std::vector<Bounds> all_bounds;
        for (std::size_t n = 0; n < M; ++n) {
            all_bounds.insert(all_bounds.end(), bounds.begin(), bounds.end());
        }
        auto unflatten = [&](std::span<const double> x) {
            std::vector<std::vector<double>> p(M);
            for (std::size_t n = 0; n < M; ++n) {
                p[n].assign(x.begin() + static_cast<std::ptrdiff_t>(n * k),
                            x.begin() + static_cast<std::ptrdiff_t>((n + 1) * k));
            }
            return p;
        };
        Objective joint = [&](std::span<const double> x) { return network(unflatten(x)); };
        BoxedSimplex simplex(joint, all_bounds);
        out.converged = false;
        for (int restart = 0; restart < 10 && remaining > 0; ++restart) {
            std::vector<double> x0;
            for (const auto& q : out.params) {
                x0.insert(x0.end(), q.begin(), q.end());
            }
            const int used_before = simplex.evals();
            auto d = simplex.run(x0, 0.02, remaining);
            remaining -= simplex.evals() - used_before;
            out.evals += simplex.evals() - used_before;
            const double before = out.loss;
            if (d.f < out.loss) {
                out.params = unflatten(d.x);
                out.loss = d.f;
            }
            out.history.push_back(out.loss);
            out.converged = d.converged;
            if (!(out.loss < before * (1.0 - 1e-6))) {
                break;
            }
        }
    }
    if (!std::isfinite(out.loss)) {
        throw FitError("no candidate with a finite loss within " + std::to_string(settings.max_evals) +
                       " evaluations");
    }
    return out;
}

std::unique_ptr<ModelAdapter> make_saucir_adapter(const ingest::Dataset& dataset, const FitConfig& config,
                                                  mobility::MobilitySchedule schedule, bool with_mobility) {
    return std::make_unique<SaucirAdapter>(dataset, config, std::move(schedule), with_mobility);
}

std::unique_ptr<ModelAdapter> make_sir_adapter(const ingest::Dataset& dataset, const FitConfig& config,
                                               bool with_mobility) {
    return std::make_unique<SirAdapter>(dataset, config, with_mobility);
}

MeanMobility mean_mobility(const ingest::Dataset& dataset, Date start, int days) {
    const std::size_t M = dataset.node_count();
    const auto i0 = require_date(dataset, start);
    if (days < 1 || i0 + static_cast<std::size_t>(days) > dataset.flows.flows.days()) {
        throw InvalidArgument("mobility flows do not cover the averaging window");
    }
    Matrix mean = Matrix::square(M);
    for (std::size_t t = 0; t < static_cast<std::size_t>(days); ++t) {
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t m = 0; m < M; ++m) {
                mean(n, m) += dataset.flows.flows(i0 + t, n, m) / days;
            }
        }
    }
    const auto pops = dataset.populations();
    const auto rates = mobility::rates_from_flows(mean, pops);
    const double total_flow = std::accumulate(mean.values().begin(), mean.values().end(), 0.0);
    const double total_pop = std::accumulate(pops.begin(), pops.end(), 0.0);
    return {total_flow / total_pop, rates.p_in, rates.p_out};
}

model::SirState sir_initial_state(const ingest::Dataset& dataset, Date start) {
    const auto i0 = require_date(dataset, start);
    const auto pops = dataset.populations();
    model::SirState s;
    for (std::size_t n = 0; n < dataset.node_count(); ++n) {
        const auto& series = dataset.series[n];
        const double d = static_cast<double>(series.cumulative_confirmed[i0]);
        const double r = series.cumulative_removed ? static_cast<double>((*series.cumulative_removed)[i0]) : 0.0;
        s.s.push_back(std::max(0.0, pops[n] - d));
        s.i.push_back(d - r);
        s.r.push_back(r);
    }
    return s;
}

FitResult fit_parameters(const ingest::Dataset& dataset, const FitConfig& config,
                         const mobility::MobilitySchedule& schedule) {
    config.validate();
    const int days = config.train_days();
    require_date(dataset, config.train_end);
    if (!config.quarantine.empty() && config.quarantine.size() != dataset.node_count()) {
        throw InvalidArgument("quarantine override must have one entry per node");
    }
    if (schedule.horizon() < static_cast<std::size_t>(days - 1) || schedule.node_count() != dataset.node_count()) {
        throw InvalidArgument("mobility schedule does not cover the training window");
    }
    const auto observed = observed_cumulative(dataset, config.train_start, days);
    const auto adapter = make_saucir_adapter(dataset, config, schedule, true);
    const auto search = fit_adapter(*adapter, observed, {config.loss, config.max_evals, config.seed, config.threads});

    FitResult result;
    result.train_start = config.train_start;
    result.train_end = config.train_end;
    result.loss = config.loss;
    result.train_loss = search.loss;
    result.evals_used = search.evals;
    result.converged = search.converged;
    result.loss_history = search.history;

    auto& p = result.params;
    p.theta = config.theta;
    p.incubation_lag = config.incubation_lag;
    p.asymptomatic_lag = config.asymptomatic_lag;
    p.quarantine = config.quarantine.empty() ? quarantine_rates(dataset) : config.quarantine;
    for (const auto& q : search.params) {
        p.alpha0.push_back(q[0]);
        p.tau.push_back(q[1]);
        p.zeta.push_back(q[2]);
    }

    // beta leaves D untouched; fit it on active cases C = D - removed.
    const auto paths = adapter->network_path(search.params, days - 1);
    const auto i0 = *dataset.date_index(config.train_start);
    for (std::size_t n = 0; n < dataset.node_count(); ++n) {
        const auto& s = dataset.series[n];
        if (!s.cumulative_removed) {
            p.beta.push_back(config.beta.clamp(0.1));
            continue;
        }
        std::vector<double> active;
        for (int t = 0; t < days; ++t) {
            const auto k = i0 + static_cast<std::size_t>(t);
            active.push_back(static_cast<double>(s.cumulative_confirmed[k] - (*s.cumulative_removed)[k]));
        }
        const auto& d = paths[n];
        auto sse = [&](double beta) {
            ++result.evals_used;
            double c = active[0];
            double total = 0.0;
            for (int t = 1; t < days; ++t) {
                const auto k = static_cast<std::size_t>(t);
                c = std::max(0.0, c + (d[k] - d[k - 1]) - beta * c);
                total += (c - active[k]) * (c - active[k]);
            }
            return total;
        };
        std::uintmax_t iters = 200;
        const auto best = boost::math::tools::brent_find_minima(sse, config.beta.lo, config.beta.hi, 40, iters);
        p.beta.push_back(config.beta.clamp(best.first));
    }
    return result;
}

}  // namespace saucir::calibration
