#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcid {

/// Invalid argument to a library call (bad dimension, non-positive bandwidth, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed configuration or unknown config key. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient inside the solver.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t stage)
        : std::runtime_error(what + " (stage " + std::to_string(stage) + ")"), stage_(stage) {}

    std::size_t stage() const noexcept { return stage_; }

private:
    std::size_t stage_;
};

/// The active set is empty on the estimation slice, so no inclusion rate can be formed.
class SamplingDegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Label budget exhausted, or a requested label is not available. Maps to CLI exit code 4.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, int iteration = -1)
        : std::runtime_error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")"
                                            : what),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

}  // namespace mcid
