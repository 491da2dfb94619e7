#pragma once

#include <stdexcept>
#include <string>

namespace spikeop {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Thrown when a simulated state norm exceeds the blow-up guard.
struct DivergenceError : Error {
    double time;
    DivergenceError(const std::string& msg, double t) : Error(msg), time(t) {}
};

// Thrown when a covariance factorization fails even with the largest jitter tried.
struct FactorizationError : Error {
    double attempted_jitter;
    FactorizationError(const std::string& msg, double jitter)
        : Error(msg), attempted_jitter(jitter) {}
};

}  // namespace spikeop
