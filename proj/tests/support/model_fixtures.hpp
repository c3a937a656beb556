#pragma once

// Random network instances for the model tests and the acceptance runner.

#include "reference_model.hpp"
#include "saucir/model.hpp"

#include <random>

namespace saucir::testing {

struct Scenario {
    model::NetworkState initial;
    model::EpidemicParams params;
    std::vector<double> populations;
    mobility::MobilitySchedule schedule;
};

/// M nodes of 1e4 to 1e6 people with random parameters, a small epidemic and
/// daily rates below 1% per pair over T days. History lines are random when
/// `with_history`, zero otherwise.
Scenario random_scenario(std::mt19937_64& rng, std::size_t M, std::size_t T, bool with_history);

RefInputs to_reference(const Scenario& sc);

}  // namespace saucir::testing
