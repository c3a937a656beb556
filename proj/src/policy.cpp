#include "saucir/policy.hpp"

#include "saucir/errors.hpp"
#include "saucir/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace saucir::policy {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

double column_sum(const Tensor3& w, std::size_t m, std::size_t n) {
    double s = 0.0;
    for (std::size_t t = 0; t < w.days(); ++t) {
        s += w(t, m, n);
    }
    return s;
}

bool positive_pair(const mobility::AggregateRates& agg, std::size_t m, std::size_t n) {
    return agg.c_in(m, n) > 0.0 || agg.c_out(m, n) > 0.0;
}

double draw_weight(std::mt19937_64& rng) {
    // uniform on (0, 1]
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

DegenerateIndividual::DegenerateIndividual(std::size_t m_, std::size_t n_)
    : std::runtime_error("individual has no weight on pair (" + std::to_string(m_) + ", " + std::to_string(n_) +
                         ") although its aggregate rate is positive"),
      m(m_),
      n(n_) {}

void GAConfig::validate() const {
    if (population_size < 2) {
        throw InvalidArgument("population size must be at least 2");
    }
    if (generations < 1) {
        throw InvalidArgument("generations must be at least 1");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) || !(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
        throw InvalidArgument("crossover and mutation rates must lie in [0, 1]");
    }
    if (elitism_count < 0 || elitism_count >= population_size) {
        throw InvalidArgument("elitism count must be in [0, population size)");
    }
}

void Problem::validate() const {
    const std::size_t M = populations.size();
    if (horizon < 1) {
        throw InvalidArgument("optimization horizon must be at least one day");
    }
    if (initial.nodes.size() != M || params.node_count() != M) {
        throw InvalidArgument("initial state, parameters and populations disagree on the node count");
    }
    if (aggregates.c_in.rows() != M || aggregates.c_out.rows() != M) {
        throw InvalidArgument("aggregate rates do not match the node count");
    }
    if (target_nodes.empty()) {
        throw InvalidArgument("target node set is empty");
    }
    for (std::size_t n : target_nodes) {
        if (n >= M) {
            throw InvalidArgument("target node index " + std::to_string(n) + " is outside the network");
        }
    }
    const auto violations =
        mobility::check_balance(aggregates, populations, mobility::default_balance_tolerance(populations));
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw InvalidArgument("aggregate rates are unbalanced for pair (" + std::to_string(v.n) + ", " +
                              std::to_string(v.m) + "): " + std::to_string(v.inflow_side) + " vs " +
                              std::to_string(v.outflow_side));
    }
}

Individual random_individual(std::size_t horizon, std::size_t nodes, std::mt19937_64& rng) {
    Individual ind{Tensor3(horizon, nodes, nodes)};
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t m = 0; m < nodes; ++m) {
            for (std::size_t n = 0; n < nodes; ++n) {
                if (m != n) {
                    ind.weights(t, m, n) = draw_weight(rng);
                }
            }
        }
    }
    return ind;
}

mobility::MobilitySchedule normalize_individual(const Individual& ind, const mobility::AggregateRates& agg) {
    const auto& w = ind.weights;
    const std::size_t M = w.rows();
    if (agg.c_in.rows() != M || agg.c_in.cols() != M || agg.c_out.rows() != M || agg.c_out.cols() != M) {
        throw InvalidArgument("individual and aggregate rates differ in node count");
    }
    auto out = mobility::MobilitySchedule::zeros(w.days(), M);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n || !positive_pair(agg, m, n)) {
                continue;
            }
            const double total = column_sum(w, m, n);
            if (!(total > 0.0)) {
                throw DegenerateIndividual(m, n);
            }
            for (std::size_t t = 0; t < w.days(); ++t) {
                const double share = w(t, m, n) / total;
                out.gp_in(t, m, n) = share * agg.c_in(m, n);
                out.gp_out(t, m, n) = share * agg.c_out(m, n);
            }
        }
    }
    return out;
}

int repair_individual(Individual& ind, const mobility::AggregateRates& agg, std::mt19937_64& rng, int budget) {
    auto& w = ind.weights;
    int repaired = 0;
    for (std::size_t m = 0; m < w.rows(); ++m) {
        for (std::size_t n = 0; n < w.cols(); ++n) {
            if (m == n || !positive_pair(agg, m, n)) {
                continue;
            }
            while (!(column_sum(w, m, n) > 0.0)) {
                if (repaired >= budget) {
                    throw DegenerateIndividual(m, n);
                }
                for (std::size_t t = 0; t < w.days(); ++t) {
                    w(t, m, n) = draw_weight(rng);
                }
                ++repaired;
            }
        }
    }
    return repaired;
}

double objective(const Problem& problem, const mobility::MobilitySchedule& schedule) {
    const auto trace = model::simulate(problem.initial, problem.params, problem.populations, schedule, problem.horizon);
    const auto& last = trace.states.back();
    double total = 0.0;
    for (std::size_t n : problem.target_nodes) {
        total += last.nodes[n].d;
    }
    return total;
}

double get_fitness(const Individual& ind, const Problem& problem) {
    const auto schedule = normalize_individual(ind, problem.aggregates);
    try {
        const double v = objective(problem, schedule);
        return std::isfinite(v) ? -v : kNegInf;
    } catch (const SimulationError&) {
        return kNegInf;
    }
}

std::vector<Individual> selection(std::span<const Individual> population, std::span<const double> fitness,
                                  const GAConfig& config, std::mt19937_64& rng) {
    if (population.empty() || population.size() != fitness.size()) {
        throw InvalidArgument("selection needs one fitness value per individual");
    }
    const std::size_t P = population.size();
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

    std::vector<Individual> out;
    out.reserve(P);
    const std::size_t elites = std::min(P, static_cast<std::size_t>(std::max(0, config.elitism_count)));
    for (std::size_t i = 0; i < elites; ++i) {
        out.push_back(population[order[i]]);
    }
    std::uniform_int_distribution<std::size_t> pick(0, P - 1);
    while (out.size() < P) {
        const std::size_t a = pick(rng);
        const std::size_t b = pick(rng);
        out.push_back(population[fitness[b] > fitness[a] ? b : a]);
    }
    return out;
}

void crossover(std::span<Individual> population, const GAConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = 0; i + 1 < population.size(); i += 2) {
        if (!(coin(rng) < config.crossover_rate)) {
            continue;
        }
        auto& x = population[i].weights;
        auto& y = population[i + 1].weights;
        const std::size_t T = x.days();
        const std::size_t cut = std::uniform_int_distribution<std::size_t>(0, T)(rng);
        const std::size_t stride = x.rows() * x.cols();
        auto xv = x.values();
        auto yv = y.values();
        std::swap_ranges(xv.begin() + static_cast<std::ptrdiff_t>(cut * stride), xv.end(),
                         yv.begin() + static_cast<std::ptrdiff_t>(cut * stride));
    }
}

void mutation(std::span<Individual> population, const GAConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> factor(0.5, 2.0);
    for (auto& ind : population) {
        auto& w = ind.weights;
        for (std::size_t t = 0; t < w.days(); ++t) {
            for (std::size_t m = 0; m < w.rows(); ++m) {
                for (std::size_t n = 0; n < w.cols(); ++n) {
                    if (m != n && coin(rng) < config.mutation_rate) {
                        w(t, m, n) *= factor(rng);
                    }
                }
            }
        }
    }
}

OptimizationResult optimize(const Problem& problem, const GAConfig& config,
                            const std::function<void(const Progress&)>& on_generation) {
    config.validate();
    problem.validate();
    const std::size_t M = problem.populations.size();
    const auto T = static_cast<std::size_t>(problem.horizon);
    const auto P = static_cast<std::size_t>(config.population_size);
    const auto elites = static_cast<std::size_t>(config.elitism_count);

    std::vector<Individual> population;
    population.reserve(P);
    for (std::size_t i = 0; i < P; ++i) {
        auto rng = stream(config.seed, 0, i);
        population.push_back(random_individual(T, M, rng));
    }

    OptimizationResult result;
    result.best_objective = std::numeric_limits<double>::infinity();
    Individual best;
    std::vector<double> fitness(P);
    std::vector<int> repairs(P);
    for (int g = 0; g < config.generations; ++g) {
        parallel_for(P, config.threads, [&](std::size_t i) {
            auto rng = stream(config.seed, static_cast<std::uint64_t>(g) + 1, i);
            repairs[i] = repair_individual(population[i], problem.aggregates, rng);
            fitness[i] = get_fitness(population[i], problem);
        });
        for (std::size_t i = 0; i < P; ++i) {
            result.repairs += repairs[i];
            // ties keep the earliest individual so the result is order-stable
            if (fitness[i] > kNegInf && -fitness[i] < result.best_objective) {
                result.best_objective = -fitness[i];
                best = population[i];
            }
        }
        result.fitness_history.push_back(result.best_objective);
        if (on_generation) {
            on_generation({g + 1, config.generations, result.best_objective});
        }
        if (g + 1 == config.generations) {
            break;
        }
        auto rng = stream(config.seed, static_cast<std::uint64_t>(g) + 1, P);
        population = selection(population, fitness, config, rng);
        std::span<Individual> offspring(population.begin() + static_cast<std::ptrdiff_t>(elites), population.end());
        crossover(offspring, config, rng);
        mutation(offspring, config, rng);
    }
    if (!std::isfinite(result.best_objective)) {
        throw SimulationError(0, "objective", problem.horizon);
    }

    result.best_schedule = normalize_individual(best, problem.aggregates);
    const auto agg = mobility::aggregate(result.best_schedule);
    result.constraint_residual = mobility::balance_residual(agg, problem.populations);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < M; ++n) {
            result.aggregate_error = std::max({result.aggregate_error, std::abs(agg.c_in(m, n) - problem.aggregates.c_in(m, n)),
                                               std::abs(agg.c_out(m, n) - problem.aggregates.c_out(m, n))});
        }
    }
    return result;
}

}  // namespace saucir::policy
