#pragma once

// HTTP/JSON API over the engine: what-if simulations, forecasts and
// asynchronous optimization jobs against loaded fits.

#include "saucir/ingest.hpp"
#include "saucir/io.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace saucir::service {

struct LoadedFit {
    std::string id;
    io::FitDocument doc;
};

struct Options {
    std::size_t job_capacity = 2;
    std::string cors_origin = "*";
    /// Receives one line per request; standard error when empty.
    std::function<void(const std::string&)> log;
};

/// The dataset every fit refers to, plus the fits.
struct Inputs {
    std::optional<ingest::Dataset> dataset;
    std::vector<LoadedFit> fits;
};

/// Loads fits given as "path" (id is the file stem) or "id=path". The dataset
/// comes from `data` when given, else from the first fit's recorded paths.
/// Throws DataError or InvalidArgument.
Inputs load_inputs(const std::optional<io::DataPaths>& data, const std::vector<std::string>& fit_specs);

class Service {
public:
    Service(Inputs inputs, Options options = {});
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Returns false when the address cannot be bound.
    bool bind(const std::string& host, int port);
    /// Binds an ephemeral port and returns it, or -1.
    int bind_any(const std::string& host = "127.0.0.1");
    /// Serves until stop(); blocks.
    bool run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace saucir::service
