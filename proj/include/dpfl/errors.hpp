#pragma once

#include <stdexcept>
#include <string>

namespace dpfl {

// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed graph, matrix or problem data (bad sizes, disconnected graph,
// non-PSD matrix, violated strong convexity).
class ConstructionError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A node-local computation asked for data owned by another node.
class LocalityError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// An iterative solver stopped at its iteration cap before meeting its
// tolerance. `residual()` is the last gradient norm it observed.
class NonconvergenceError : public Error {
public:
    NonconvergenceError(const std::string& what, double residual)
        : Error(what + " (achieved residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace dpfl
