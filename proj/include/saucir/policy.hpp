#pragma once

#include "saucir/grid.hpp"
#include "saucir/mobility.hpp"
#include "saucir/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace saucir::policy {

/// Temporal redistribution weights (T, M, M); one tensor drives both the in-
/// and out-schedules after normalization. Diagonal entries stay zero.
struct Individual {
    Tensor3 weights;

    bool operator==(const Individual&) const = default;
};

struct GAConfig {
    int population_size = 50;
    int generations = 200;
    double crossover_rate = 0.8;
    double mutation_rate = 0.02;
    int elitism_count = 2;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    void validate() const;
};

/// Everything a fitness evaluation needs besides the individual. The target
/// set and horizon live here rather than in GAConfig.
struct Problem {
    model::NetworkState initial;
    model::EpidemicParams params;
    std::vector<double> populations;
    mobility::AggregateRates aggregates;
    std::vector<std::size_t> target_nodes;
    int horizon = 0;

    void validate() const;
};

struct OptimizationResult {
    mobility::MobilitySchedule best_schedule;
    double best_objective = 0.0;          // sum of D over the target nodes at the horizon
    std::vector<double> fitness_history;  // best objective so far, one entry per generation
    double constraint_residual = 0.0;     // balance residual of the best schedule
    double aggregate_error = 0.0;         // largest |aggregate(best) - input| over pairs
    int repairs = 0;
};

/// A pair with a positive aggregate has an all-zero temporal column.
class DegenerateIndividual : public std::runtime_error {
public:
    DegenerateIndividual(std::size_t m, std::size_t n);
    std::size_t m;
    std::size_t n;
};

/// Entries uniform on (0, 1], diagonal zero.
Individual random_individual(std::size_t horizon, std::size_t nodes, std::mt19937_64& rng);

/// gp(t, m, n) = w(t, m, n) * c(m, n) / sum_t w(t, m, n) for both directions.
mobility::MobilitySchedule normalize_individual(const Individual& ind, const mobility::AggregateRates& agg);

/// Re-randomizes degenerate columns; returns how many were repaired. Throws
/// DegenerateIndividual once `budget` repairs are exhausted.
int repair_individual(Individual& ind, const mobility::AggregateRates& agg, std::mt19937_64& rng, int budget = 10);

/// Sum of cumulative confirmed over the target nodes at the horizon.
double objective(const Problem& problem, const mobility::MobilitySchedule& schedule);

/// Minus the objective under the normalized schedule; -inf if the run blows up.
double get_fitness(const Individual& ind, const Problem& problem);

/// Tournament selection of size 2. The `elitism_count` fittest individuals
/// come first, unchanged; the output has the input's size.
std::vector<Individual> selection(std::span<const Individual> population, std::span<const double> fitness,
                                  const GAConfig& config, std::mt19937_64& rng);

/// Pairs neighbours and, with probability crossover_rate, swaps their days
/// [cut, T) for a cut drawn uniformly from 0..T.
void crossover(std::span<Individual> population, const GAConfig& config, std::mt19937_64& rng);

/// Multiplies each off-diagonal entry, with probability mutation_rate, by a
/// factor drawn uniformly from [0.5, 2].
void mutation(std::span<Individual> population, const GAConfig& config, std::mt19937_64& rng);

struct Progress {
    int generation = 0;  // 1-based, generations completed
    int generations = 0;
    double best_objective = 0.0;
};

/// Generational loop: evaluate, record best, select, cross over, mutate.
/// Elites skip crossover and mutation. Deterministic for a seed regardless of
/// `config.threads`.
OptimizationResult optimize(const Problem& problem, const GAConfig& config,
                            const std::function<void(const Progress&)>& on_generation = {});

}  // namespace saucir::policy
