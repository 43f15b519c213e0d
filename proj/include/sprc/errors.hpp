#pragma once

#include <stdexcept>
#include <string>

namespace sprc {

// Bad dimensions, invalid parameter values, malformed config files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A quantity was requested before enough history/data exists to form it.
class NotReadyError : public std::runtime_error {
public:
    explicit NotReadyError(const std::string& what) : std::runtime_error(what) {}
};

// Constraint set has no feasible point (empty box before the QP even runs).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sprc
