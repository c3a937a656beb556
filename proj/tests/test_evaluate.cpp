#include "doctest.h"

#include "country_forecasts.hpp"
#include "saucir/errors.hpp"
#include "saucir/evaluate.hpp"
#include "synthetic.hpp"

#include <cmath>
#include <random>

using namespace saucir;
using namespace saucir::evaluate;

namespace {

Date day(int offset) { return Date{std::chrono::year{2020} / 1 / 24} + std::chrono::days{offset}; }

calibration::FitConfig config_for(int train_days) {
    calibration::FitConfig c;
    c.train_start = day(0);
    c.train_end = day(train_days - 1);
    return c;
}

ingest::Dataset flat_dataset(std::size_t nodes, int days, std::int64_t level) {
    ingest::Dataset ds;
    std::vector<Date> dates;
    for (int t = 0; t < days; ++t) {
        dates.push_back(day(t));
    }
    for (std::size_t n = 0; n < nodes; ++n) {
        const std::string id = "N" + std::to_string(n);
        ds.nodes.push_back({id, id, 100000});
        ds.series.push_back({id, dates, std::vector<std::int64_t>(static_cast<std::size_t>(days), level),
                             std::nullopt, std::nullopt});
        ds.flows.nodes.push_back(id);
    }
    ds.flows.dates = dates;
    ds.flows.flows = Tensor3(static_cast<std::size_t>(days), nodes, nodes);
    return ds;
}

}  // namespace

TEST_CASE("percentage_error reproduces the reported country cells") {
    CHECK(std::abs(percentage_error(225605, 225886) - -0.0012) <= 5e-5);
    CHECK(std::abs(percentage_error(252171, 250141) - 0.0081) <= 5e-5);
    CHECK(percentage_error(1234, 1234) == 0.0);
    int cells = 0;
    for (const auto& c : testing::kCountryForecasts) {
        for (std::size_t t = 0; t < 3; ++t) {
            INFO(c.country << " day " << t);
            CHECK(std::abs(percentage_error(c.predicted[t], c.observed[t]) - c.pe[t]) <= 5e-5);
            ++cells;
        }
    }
    CHECK(cells == 21);
    CHECK_THROWS_AS(percentage_error(1, 0), InvalidArgument);
    CHECK_THROWS_AS(percentage_error(1, -3), InvalidArgument);
}

TEST_CASE("mape") {
    const auto& uk = testing::kCountryForecasts.back();
    CHECK(std::abs(mape(uk.predicted, uk.observed) - 0.011) <= 5e-4);
    const std::vector<double> same{3, 4, 5};
    CHECK(mape(same, same) == 0.0);

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(1.0, 1000.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pred(5), obs(5);
        for (std::size_t t = 0; t < 5; ++t) {
            pred[t] = u(rng);
            obs[t] = u(rng);
        }
        double brute = 0.0;
        for (std::size_t t = 0; t < 5; ++t) {
            brute = std::max(brute, std::abs(pred[t] - obs[t]) / obs[t]);
        }
        CHECK(mape(pred, obs) == brute);
        // scale covariance
        std::vector<double> p2 = pred, o2 = obs;
        for (auto& v : p2) v *= 7.5;
        for (auto& v : o2) v *= 7.5;
        CHECK(mape(p2, o2) == doctest::Approx(brute).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mape(std::vector<double>{1, 2}, std::vector<double>{1}), InvalidArgument);
    CHECK_THROWS_AS(mape(std::vector<double>{1}, std::vector<double>{0}), InvalidArgument);
    CHECK_THROWS_AS(mape(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("rmse") {
    CHECK(rmse(std::vector<double>{10, 12}, std::vector<double>{10, 10}) == doctest::Approx(2.0));
    CHECK(rmse(std::vector<double>{4, 5, 6}, std::vector<double>{4, 5, 6}) == 0.0);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial) % 6;
        std::vector<double> pred(n), obs(n);
        double sse = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            pred[t] = u(rng);
            obs[t] = u(rng);
            sse += (pred[t] - obs[t]) * (pred[t] - obs[t]);
        }
        CHECK(std::abs(rmse(pred, obs) - std::sqrt(sse / static_cast<double>(n - 1))) <= 1e-12);
        std::vector<double> p2 = pred, o2 = obs;
        for (auto& v : p2) v *= 3;
        for (auto& v : o2) v *= 3;
        CHECK(rmse(p2, o2) == doctest::Approx(3 * rmse(pred, obs)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(rmse(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
}

TEST_CASE("build_reports") {
    const auto ds = flat_dataset(2, 10, 50);
    const std::vector<std::vector<double>> paths{{50, 50, 50, 50, 51, 52, 53}, {50, 50, 50, 50, 50, 50, 50}};
    SUBCASE("horizon three") {
        const auto r = build_reports(ds, paths, day(0), day(3), 3);
        REQUIRE(r.size() == 2);
        CHECK(r[0].dates == std::vector<Date>{day(4), day(5), day(6)});
        CHECK(r[0].predicted == std::vector<double>{51, 52, 53});
        CHECK(r[0].observed == std::vector<double>{50, 50, 50});
        REQUIRE(r[0].mape);
        CHECK(*r[0].mape == doctest::Approx(0.06));
        double worst = 0.0;
        for (double pe : r[0].pe) worst = std::max(worst, std::abs(pe));
        CHECK(*r[0].mape == worst);
        CHECK(*r[1].mape == 0.0);
        CHECK(*r[1].rmse == 0.0);
    }
    SUBCASE("horizon zero holds only the last training day") {
        const auto r = build_reports(ds, paths, day(0), day(3), 0);
        CHECK(r[0].dates == std::vector<Date>{day(3)});
        CHECK(!r[0].mape);
        CHECK(!r[0].rmse);
    }
    SUBCASE("no observations past the data") {
        std::vector<std::vector<double>> long_paths(2, std::vector<double>(13, 50.0));
        const auto r = build_reports(ds, long_paths, day(0), day(8), 0);
        CHECK(r[0].observed.size() == 1);
        const auto beyond = build_reports(ds, long_paths, day(0), day(8), 4);
        CHECK(beyond[0].observed.empty());
        CHECK(!beyond[0].mape);
    }
}

TEST_CASE("forecast from fitted parameters") {
    testing::SyntheticSpec spec;
    const auto syn = testing::make_synthetic(spec);
    auto cfg = config_for(23);
    const auto fit = calibration::fit_parameters(syn.dataset, cfg, calibration::window_schedule(syn.dataset, day(0), 22));
    const auto schedule = calibration::window_schedule(syn.dataset, day(0), 25);
    const auto reports = forecast(fit, syn.dataset, schedule, 3);
    for (const auto& r : reports) {
        REQUIRE(r.mape);
        CHECK(*r.mape <= 0.02);
        CHECK(r.predicted.size() == 3);
    }
    CHECK_THROWS_AS(forecast(fit, syn.dataset, calibration::window_schedule(syn.dataset, day(0), 23), 3),
                    InvalidArgument);
    const auto zero = forecast(fit, syn.dataset, schedule, 0);
    CHECK(zero[0].dates.size() == 1);
}

TEST_CASE("compare_models") {
    SUBCASE("mobility helps on nodes with net flow") {
        testing::SyntheticSpec spec;
        spec.seed = 3;
        spec.mobility = 3.0;
        const auto syn = testing::make_synthetic(spec);
        const auto cmp = compare_models(syn.dataset, config_for(23), 3);
        REQUIRE(cmp.results.size() == 4);
        const auto& minus_m = cmp.results[2];
        const auto& full = cmp.results[3];
        CHECK(minus_m.method == Method::saucir_minus_m);
        CHECK(full.method == Method::saucir);
        const auto& f = syn.dataset.flows.flows;
        for (std::size_t n = 0; n < 3; ++n) {
            double net = 0.0;
            for (std::size_t t = 0; t < f.days(); ++t) {
                for (std::size_t m = 0; m < 3; ++m) {
                    net += f(t, n, m) - f(t, m, n);
                }
            }
            if (net != 0.0) {
                CHECK(*full.reports[n].rmse <= *minus_m.reports[n].rmse);
            }
        }
    }
    SUBCASE("no epidemic scores zero everywhere") {
        const auto ds = flat_dataset(2, 20, 30);
        const auto cmp = compare_models(ds, config_for(17), 3);
        for (const auto& res : cmp.results) {
            for (const auto& r : res.reports) {
                CHECK(*r.mape == doctest::Approx(0.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("single node without flows: SIR and SIR+M agree") {
        testing::SyntheticSpec spec;
        spec.nodes = 1;
        spec.mobility = 0.0;
        spec.seed = 9;
        const auto syn = testing::make_synthetic(spec);
        const auto cmp = compare_models(syn.dataset, config_for(23), 3, {Method::sir, Method::sir_m});
        REQUIRE(cmp.results.size() == 2);
        CHECK(cmp.results[0].reports[0].predicted == cmp.results[1].reports[0].predicted);
        CHECK(*cmp.results[0].reports[0].mape == *cmp.results[1].reports[0].mape);
    }
    SUBCASE("observations must cover the horizon") {
        const auto ds = flat_dataset(2, 20, 30);
        CHECK_THROWS_AS(compare_models(ds, config_for(17), 3 + 1), DataError);
    }
    SUBCASE("method names round-trip") {
        for (Method m : all_methods()) {
            CHECK(parse_method(method_name(m)) == m);
        }
        CHECK_THROWS_AS(parse_method("SEIR"), InvalidArgument);
    }
}
