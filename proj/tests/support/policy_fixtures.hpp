#pragma once

// Small optimization instances shared by the policy tests and the acceptance
// runner.

#include "saucir/policy.hpp"
#include "synthetic.hpp"

#include <vector>

namespace saucir::testing {

/// Two nodes of 1e5 people, one heavily infected, symmetric aggregate rates
/// of `rate` per pair over the horizon, both nodes targeted.
policy::Problem toy_problem(int horizon, int incubation_lag, double rate = 0.4);

struct GridOptimum {
    double best = 0.0;
    double worst = 0.0;
    long evaluated = 0;
};

/// Exhaustive enumeration of every individual whose off-diagonal weights are
/// drawn from `levels`.
GridOptimum grid_optimum(const policy::Problem& problem, const std::vector<double>& levels);

/// Optimization problem on a synthetic network: true parameters, the
/// dataset's initial state, and aggregates of the first `horizon` days of
/// flows multiplied by `scale`.
policy::Problem synthetic_problem(const Synthetic& syn, int horizon, double scale);

}  // namespace saucir::testing

namespace saucir::testing {

/// Four identical nodes (same size, parameters and prevalence, no quarantine)
/// part-way through an epidemic (a tenth of each population already removed,
/// so migration never pushes S against its cap), balanced pairwise rates of
/// about 0.1% per day multiplied by `scale`. Rescheduling migration here can
/// neither separate susceptible from infected travellers nor thin out a hot
/// spot, so its only net effect is the infections acquired while travelling.
policy::Problem scale_network(double scale, int horizon = 30);

}  // namespace saucir::testing
