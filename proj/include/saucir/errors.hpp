#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace saucir {

/// Malformed or inconsistent input data (bad CSV, violated type invariants).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    /// 1-based line number in the offending file, 0 when not line-specific.
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Parameters or configuration outside their allowed domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The day stepper produced a non-finite value.
class SimulationError : public std::runtime_error {
public:
    SimulationError(std::size_t node, std::string compartment, int day)
        : std::runtime_error("non-finite " + compartment + " at node " + std::to_string(node) + " on day " +
                             std::to_string(day)),
          node_(node),
          compartment_(std::move(compartment)),
          day_(day) {}

    std::size_t node() const { return node_; }
    const std::string& compartment() const { return compartment_; }
    int day() const { return day_; }

private:
    std::size_t node_;
    std::string compartment_;
    int day_;
};

/// Parameter search could not produce any finite-loss candidate.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace saucir
