#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stepsize {

// Invalid configuration, rejected before any stepping happens.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An optimizer state became non-finite. Carries the 1-based step index of the
// update that produced the non-finite value.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::uint64_t step, const std::string& what)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

    std::uint64_t step() const { return step_; }

private:
    std::uint64_t step_;
};

// A record, table, or file is missing the data an operation needs.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stepsize
