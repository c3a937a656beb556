#include "doctest.h"

#include "policy_fixtures.hpp"
#include "saucir/errors.hpp"
#include "saucir/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace saucir;
using namespace saucir::policy;

namespace {

mobility::AggregateRates random_aggregates(std::size_t M, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 0.5);
    mobility::AggregateRates agg{Matrix::square(M), Matrix::square(M), 0};
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < M; ++n) {
            if (m != n) {
                agg.c_in(m, n) = u(rng);
                agg.c_out(m, n) = u(rng);
            }
        }
    }
    return agg;
}

double column_sum(const Tensor3& w, std::size_t m, std::size_t n) {
    double s = 0.0;
    for (std::size_t t = 0; t < w.days(); ++t) {
        s += w(t, m, n);
    }
    return s;
}

std::vector<Individual> random_population(std::size_t P, std::size_t T, std::size_t M, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Individual> pop;
    for (std::size_t i = 0; i < P; ++i) {
        pop.push_back(random_individual(T, M, rng));
    }
    return pop;
}

bool diagonals_zero(const Individual& ind) {
    for (std::size_t t = 0; t < ind.weights.days(); ++t) {
        for (std::size_t m = 0; m < ind.weights.rows(); ++m) {
            if (ind.weights(t, m, m) != 0.0) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("normalize_individual") {
    SUBCASE("uniform weights split each aggregate evenly") {
        mobility::AggregateRates agg{Matrix::square(2), Matrix::square(2), 4};
        agg.c_in(0, 1) = 0.8;
        agg.c_out(0, 1) = 0.4;
        Individual ind{Tensor3(4, 2, 2)};
        for (std::size_t t = 0; t < 4; ++t) {
            ind.weights(t, 0, 1) = 1.0;
        }
        const auto s = normalize_individual(ind, agg);
        for (std::size_t t = 0; t < 4; ++t) {
            CHECK(s.gp_in(t, 0, 1) == 0.2);
            CHECK(s.gp_out(t, 0, 1) == 0.1);
        }
    }
    SUBCASE("weights one and three") {
        mobility::AggregateRates agg{Matrix::square(2), Matrix::square(2), 2};
        agg.c_in(0, 1) = 0.8;
        Individual ind{Tensor3(2, 2, 2)};
        ind.weights(0, 0, 1) = 1.0;
        ind.weights(1, 0, 1) = 3.0;
        const auto s = normalize_individual(ind, agg);
        CHECK(s.gp_in(0, 0, 1) == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(s.gp_in(1, 0, 1) == doctest::Approx(0.6).epsilon(1e-15));
    }
    SUBCASE("aggregates are reproduced for random individuals") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t M = 2 + static_cast<std::size_t>(trial) % 4;
            const std::size_t T = 1 + static_cast<std::size_t>(trial) % 9;
            const auto agg = random_aggregates(M, rng);
            const auto ind = random_individual(T, M, rng);
            const auto back = mobility::aggregate(normalize_individual(ind, agg));
            for (std::size_t m = 0; m < M; ++m) {
                for (std::size_t n = 0; n < M; ++n) {
                    CHECK(std::abs(back.c_in(m, n) - agg.c_in(m, n)) <= 1e-12);
                    CHECK(std::abs(back.c_out(m, n) - agg.c_out(m, n)) <= 1e-12);
                }
            }
        }
    }
    SUBCASE("all-zero column on a used pair") {
        mobility::AggregateRates agg{Matrix::square(2), Matrix::square(2), 3};
        agg.c_in(1, 0) = 0.3;
        Individual ind{Tensor3(3, 2, 2)};
        ind.weights(0, 0, 1) = 1.0;
        CHECK_THROWS_AS(normalize_individual(ind, agg), DegenerateIndividual);
        std::mt19937_64 rng(3);
        CHECK(repair_individual(ind, agg, rng) == 1);
        CHECK(column_sum(ind.weights, 1, 0) > 0.0);
        CHECK_NOTHROW(normalize_individual(ind, agg));
        CHECK(diagonals_zero(ind));
    }
    SUBCASE("unused pairs may stay empty") {
        mobility::AggregateRates agg{Matrix::square(2), Matrix::square(2), 3};
        Individual ind{Tensor3(3, 2, 2)};
        const auto s = normalize_individual(ind, agg);
        CHECK(std::all_of(s.gp_in.values().begin(), s.gp_in.values().end(), [](double v) { return v == 0.0; }));
    }
}

TEST_CASE("get_fitness") {
    SUBCASE("infection-free start scores every individual the same") {
        auto p = testing::toy_problem(6, 3);
        for (auto& x : p.initial.nodes) {
            x.s += x.u + x.a;
            x.u = 0.0;
            x.a = 0.0;
        }
        const double expected = -(p.initial.nodes[0].d + p.initial.nodes[1].d);
        std::mt19937_64 rng(4);
        for (int i = 0; i < 10; ++i) {
            CHECK(get_fitness(random_individual(6, 2, rng), p) == expected);
        }
    }
    SUBCASE("rescaling a pair's column leaves fitness unchanged") {
        const auto p = testing::toy_problem(8, 3);
        std::mt19937_64 rng(5);
        for (int i = 0; i < 10; ++i) {
            auto a = random_individual(8, 2, rng);
            auto b = a;
            for (std::size_t t = 0; t < 8; ++t) {
                b.weights(t, 0, 1) *= 8.0;
                b.weights(t, 1, 0) *= 0.25;
            }
            CHECK(get_fitness(b, p) == doctest::Approx(get_fitness(a, p)).epsilon(1e-12));
        }
    }
    SUBCASE("matches a direct simulation of the normalized schedule") {
        const auto p = testing::toy_problem(3, 3);
        std::mt19937_64 rng(6);
        for (int i = 0; i < 10; ++i) {
            const auto ind = random_individual(3, 2, rng);
            const auto schedule = normalize_individual(ind, p.aggregates);
            const auto trace = model::simulate(p.initial, p.params, p.populations, schedule, 3);
            const double direct = trace.states.back().nodes[0].d + trace.states.back().nodes[1].d;
            CHECK(get_fitness(ind, p) == -direct);
        }
    }
    SUBCASE("target set restricts the sum") {
        auto p = testing::toy_problem(8, 3);
        std::mt19937_64 rng(7);
        const auto ind = random_individual(8, 2, rng);
        const double both = get_fitness(ind, p);
        p.target_nodes = {1};
        const double one = get_fitness(ind, p);
        p.target_nodes = {0};
        CHECK(get_fitness(ind, p) + one == doctest::Approx(both).epsilon(1e-12));
    }
}

TEST_CASE("selection") {
    GAConfig cfg;
    cfg.population_size = 8;
    cfg.elitism_count = 2;
    const auto pop = random_population(8, 3, 2, 1);
    SUBCASE("equal fitness resamples the input") {
        const std::vector<double> fit(8, -5.0);
        std::mt19937_64 rng(2);
        const auto out = selection(pop, fit, cfg, rng);
        CHECK(out.size() == pop.size());
        for (const auto& ind : out) {
            CHECK(std::find(pop.begin(), pop.end(), ind) != pop.end());
        }
    }
    SUBCASE("elites come first and unchanged") {
        std::vector<double> fit{-9, -3, -7, -1, -8, -6, -2, -5};
        std::mt19937_64 rng(3);
        const auto out = selection(pop, fit, cfg, rng);
        CHECK(out[0] == pop[3]);
        CHECK(out[1] == pop[6]);
    }
    SUBCASE("a -inf individual survives only tournaments against itself") {
        std::vector<double> fit(8, -10.0);
        fit[4] = -std::numeric_limits<double>::infinity();
        cfg.elitism_count = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            std::mt19937_64 rng(seed);
            std::mt19937_64 replay(seed);
            const auto out = selection(pop, fit, cfg, rng);
            std::uniform_int_distribution<std::size_t> pick(0, 7);
            int self_matches = 0;
            for (int k = 0; k < 8; ++k) {
                const std::size_t a = pick(replay);
                const std::size_t b = pick(replay);
                self_matches += (a == 4 && b == 4) ? 1 : 0;
            }
            CHECK(std::count(out.begin(), out.end(), pop[4]) == self_matches);
        }
    }
    SUBCASE("config validation") {
        GAConfig bad;
        bad.population_size = 4;
        bad.elitism_count = 4;
        CHECK_THROWS_AS(bad.validate(), InvalidArgument);
        bad.elitism_count = 1;
        bad.mutation_rate = 1.5;
        CHECK_THROWS_AS(bad.validate(), InvalidArgument);
        CHECK_NOTHROW(GAConfig{}.validate());
    }
}

TEST_CASE("crossover") {
    GAConfig cfg;
    SUBCASE("rate zero leaves the population alone") {
        auto pop = random_population(6, 5, 3, 8);
        const auto before = pop;
        cfg.crossover_rate = 0.0;
        std::mt19937_64 rng(1);
        crossover(pop, cfg, rng);
        CHECK(pop == before);
    }
    SUBCASE("children are a head of one parent and the tail of the other") {
        cfg.crossover_rate = 1.0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            auto pop = random_population(2, 6, 3, seed);
            const auto parents = pop;
            std::mt19937_64 rng(seed);
            crossover(pop, cfg, rng);
            bool explained = false;
            for (std::size_t cut = 0; cut <= 6 && !explained; ++cut) {
                bool ok = true;
                for (std::size_t t = 0; t < 6 && ok; ++t) {
                    const auto& from0 = t < cut ? parents[0] : parents[1];
                    const auto& from1 = t < cut ? parents[1] : parents[0];
                    ok = pop[0].weights.day(t) == from0.weights.day(t) && pop[1].weights.day(t) == from1.weights.day(t);
                }
                explained = ok;
            }
            CHECK(explained);
            for (std::size_t m = 0; m < 3; ++m) {
                for (std::size_t n = 0; n < 3; ++n) {
                    const double kids = column_sum(pop[0].weights, m, n) + column_sum(pop[1].weights, m, n);
                    const double olds = column_sum(parents[0].weights, m, n) + column_sum(parents[1].weights, m, n);
                    CHECK(kids == doctest::Approx(olds).epsilon(1e-12));
                }
            }
            CHECK(diagonals_zero(pop[0]));
            CHECK(diagonals_zero(pop[1]));
        }
    }
}

TEST_CASE("mutation") {
    GAConfig cfg;
    SUBCASE("rate zero leaves the population alone") {
        auto pop = random_population(4, 5, 3, 9);
        const auto before = pop;
        cfg.mutation_rate = 0.0;
        std::mt19937_64 rng(1);
        mutation(pop, cfg, rng);
        CHECK(pop == before);
    }
    SUBCASE("all-zero individual stays zero") {
        std::vector<Individual> pop{Individual{Tensor3(5, 3, 3)}};
        cfg.mutation_rate = 1.0;
        std::mt19937_64 rng(1);
        mutation(pop, cfg, rng);
        CHECK(pop[0] == Individual{Tensor3(5, 3, 3)});
    }
    SUBCASE("changed fraction matches the rate") {
        auto pop = random_population(40, 20, 4, 10);
        const auto before = pop;
        cfg.mutation_rate = 0.05;
        std::mt19937_64 rng(11);
        mutation(pop, cfg, rng);
        long changed = 0;
        long entries = 0;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto a = before[i].weights.values();
            const auto b = pop[i].weights.values();
            for (std::size_t k = 0; k < a.size(); ++k) {
                if (a[k] != 0.0 || b[k] != 0.0) {
                    ++entries;
                    changed += a[k] != b[k] ? 1 : 0;
                    CHECK(b[k] >= 0.5 * a[k]);
                    CHECK(b[k] <= 2.0 * a[k]);
                }
            }
            CHECK(diagonals_zero(pop[i]));
        }
        const double n = static_cast<double>(entries);
        const double sigma = std::sqrt(n * 0.05 * 0.95);
        CHECK(std::abs(static_cast<double>(changed) - 0.05 * n) <= 3.0 * sigma);
    }
}

TEST_CASE("optimize") {
    GAConfig cfg;
    cfg.population_size = 20;
    cfg.generations = 30;
    SUBCASE("best-so-far never gets worse and aggregates are exact") {
        const auto p = testing::toy_problem(8, 3);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            cfg.seed = seed;
            const auto r = optimize(p, cfg);
            REQUIRE(r.fitness_history.size() == 30);
            for (std::size_t g = 1; g < r.fitness_history.size(); ++g) {
                CHECK(r.fitness_history[g] <= r.fitness_history[g - 1]);
            }
            CHECK(r.best_objective == r.fitness_history.back());
            CHECK(r.aggregate_error <= 1e-12);
            CHECK(r.constraint_residual <= mobility::default_balance_tolerance(p.populations));
            CHECK(objective(p, r.best_schedule) == r.best_objective);
        }
    }
    SUBCASE("same seed, any thread count, same answer") {
        const auto p = testing::toy_problem(8, 3);
        cfg.seed = 7;
        const auto a = optimize(p, cfg);
        cfg.threads = 3;
        const auto b = optimize(p, cfg);
        CHECK(a.best_schedule == b.best_schedule);
        CHECK(a.fitness_history == b.fitness_history);
    }
    SUBCASE("zero aggregates reduce to the no-migration model") {
        auto p = testing::toy_problem(8, 3, 0.0);
        const auto r = optimize(p, cfg);
        const auto trace = model::simulate_saucir_minus_m(p.initial, p.params, p.populations, 8);
        const double direct = trace.states.back().nodes[0].d + trace.states.back().nodes[1].d;
        CHECK(r.best_objective == direct);
        CHECK(std::all_of(r.fitness_history.begin(), r.fitness_history.end(),
                          [&](double v) { return v == direct; }));
    }
    SUBCASE("beats the best coarse-grid individual") {
        const auto p = testing::toy_problem(8, 3);
        const auto grid = testing::grid_optimum(p, {1.0, 4.0});
        CHECK(grid.worst > grid.best);
        cfg.population_size = 50;
        cfg.generations = 100;
        const auto r = optimize(p, cfg);
        CHECK(r.best_objective <= 1.05 * grid.best);
    }
    SUBCASE("two-day horizon cannot move the objective") {
        const auto p = testing::toy_problem(2, 3);
        const auto grid = testing::grid_optimum(p, {1.0, 2.0, 3.0, 4.0});
        CHECK(grid.best == grid.worst);
        const auto r = optimize(p, cfg);
        CHECK(std::abs(r.best_objective - grid.best) <= 0.05 * grid.best);
    }
    SUBCASE("progress callback fires once per generation") {
        const auto p = testing::toy_problem(4, 3);
        int calls = 0;
        int last = 0;
        optimize(p, cfg, [&](const Progress& pr) {
            ++calls;
            last = pr.generation;
            CHECK(pr.generations == 30);
        });
        CHECK(calls == 30);
        CHECK(last == 30);
    }
    SUBCASE("unbalanced aggregates are rejected") {
        auto p = testing::toy_problem(4, 3);
        p.aggregates.c_in(0, 1) = 0.9;
        CHECK_THROWS_AS(optimize(p, cfg), InvalidArgument);
    }
    SUBCASE("bad target set is rejected") {
        auto p = testing::toy_problem(4, 3);
        p.target_nodes = {};
        CHECK_THROWS_AS(optimize(p, cfg), InvalidArgument);
        p.target_nodes = {5};
        CHECK_THROWS_AS(optimize(p, cfg), InvalidArgument);
    }
}
