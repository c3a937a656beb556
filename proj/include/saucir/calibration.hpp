#pragma once

#include "saucir/dates.hpp"
#include "saucir/ingest.hpp"
#include "saucir/mobility.hpp"
#include "saucir/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saucir::calibration {

enum class LossKind { cumulative, daily };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;

    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
    bool operator==(const Bounds&) const = default;
};

struct FitConfig {
    Date train_start{};
    Date train_end{};
    double theta = 0.25;
    Bounds alpha0{0.0, 2.0};
    Bounds tau{0.0, 0.5};
    Bounds zeta{0.0, 1.0};
    Bounds beta{0.0, 1.0};
    LossKind loss = LossKind::cumulative;
    int max_evals = 20000;
    std::uint64_t seed = 1;
    int incubation_lag = 5;
    int asymptomatic_lag = 21;
    /// Per-node quarantine rates. When empty they come from the quarantine
    /// labels (estimate_quarantine_rate), or 0 for nodes without labels.
    std::vector<double> quarantine;
    unsigned threads = 1;

    int train_days() const { return days_between(train_start, train_end) + 1; }
    /// Throws InvalidArgument.
    void validate() const;
};

struct FitResult {
    model::EpidemicParams params;
    double train_loss = 0.0;
    int evals_used = 0;
    bool converged = false;
    /// Best loss after the grid and after each descent restart; non-increasing.
    std::vector<double> loss_history;
    Date train_start{};
    Date train_end{};
    LossKind loss = LossKind::cumulative;
};

/// Final quarantine-labeled count over final cumulative confirmed. Throws
/// DataError when the series carries no labels.
double estimate_quarantine_rate(const ingest::EpidemicSeries& series);

/// Quarantine rates for every node: labels where present, 0 otherwise.
std::vector<double> quarantine_rates(const ingest::Dataset& dataset);

/// Initial network state on `start`. U is the number of new diagnoses over the
/// six days after `start`; the U history is back-filled from observed daily new
/// diagnoses divided by zeta (zeros when `zeta` is empty or zero).
model::NetworkState initial_state(const ingest::Dataset& dataset, Date start, double theta, int incubation_lag = 5,
                                  int asymptomatic_lag = 21, std::span<const double> zeta = {});

/// Schedule for `days` simulation steps starting on `start`, taken from the
/// dataset's flows. Throws InvalidArgument if the flows do not cover it.
mobility::MobilitySchedule window_schedule(const ingest::Dataset& dataset, Date start, int days);

/// Observed cumulative D per node over [start, start + days), as [node][day].
std::vector<std::vector<double>> observed_cumulative(const ingest::Dataset& dataset, Date start, int days);

double series_loss(std::span<const double> simulated, std::span<const double> observed, LossKind kind);

/// Loss of a full parameter set over the training window; +infinity when the
/// simulation blows up.
double fit_loss(const model::EpidemicParams& params, const ingest::Dataset& dataset, const FitConfig& config,
                const mobility::MobilitySchedule& schedule);

/// Fits alpha0, tau and zeta per node (node-wise on an uncoupled model, then a
/// coupled polish), and beta against active cases when removals are observed.
/// Throws FitError if no finite-loss candidate is found.
FitResult fit_parameters(const ingest::Dataset& dataset, const FitConfig& config,
                         const mobility::MobilitySchedule& schedule);

// --- generic search used by all comparison models -------------------------

/// A model with k per-node parameters whose cumulative-count trajectory can be
/// simulated either for one node in isolation or for the coupled network.
class ModelAdapter {
public:
    virtual ~ModelAdapter() = default;
    virtual std::size_t node_count() const = 0;
    virtual std::vector<Bounds> bounds() const = 0;
    virtual bool coupled() const = 0;
    /// Cumulative counts of node n for days 0..days.
    virtual std::vector<double> isolated_path(std::size_t n, std::span<const double> p, int days) const = 0;
    /// Cumulative counts as [node][day] for days 0..days.
    virtual std::vector<std::vector<double>> network_path(const std::vector<std::vector<double>>& p,
                                                          int days) const = 0;
};

struct SearchSettings {
    LossKind loss = LossKind::cumulative;
    int max_evals = 20000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct SearchResult {
    std::vector<std::vector<double>> params;  // [node][k]
    double loss = 0.0;
    int evals = 0;
    bool converged = false;
    std::vector<double> history;
};

/// `observed` is [node][day] over the training window (day 0 = start).
SearchResult fit_adapter(const ModelAdapter& model, const std::vector<std::vector<double>>& observed,
                         const SearchSettings& settings);

/// SaucIR (or SaucIR without mobility) with parameters (alpha0, tau, zeta);
/// theta, lags and quarantine are fixed from the config.
std::unique_ptr<ModelAdapter> make_saucir_adapter(const ingest::Dataset& dataset, const FitConfig& config,
                                                  mobility::MobilitySchedule schedule, bool with_mobility);

/// Per-node SIR with parameters (alpha0, tau, beta0). With mobility the
/// coupling uses one uniform gamma and share matrices from mean flows over the
/// training window.
std::unique_ptr<ModelAdapter> make_sir_adapter(const ingest::Dataset& dataset, const FitConfig& config,
                                               bool with_mobility);

/// Uniform gamma and share matrices built from the mean daily flows over
/// [start, start + days).
struct MeanMobility {
    double gamma = 0.0;
    Matrix p_in;
    Matrix p_out;
};
MeanMobility mean_mobility(const ingest::Dataset& dataset, Date start, int days);

/// Initial SIR state on `start`: I is the active count (confirmed minus removed).
model::SirState sir_initial_state(const ingest::Dataset& dataset, Date start);

}  // namespace saucir::calibration
