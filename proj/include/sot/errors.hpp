#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sot {

/// Source and target masses do not balance.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every coupling of the given marginals has infinite cost.
class NoFinitePlanError : public std::runtime_error {
public:
    explicit NoFinitePlanError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Iterative solve exhausted its iteration budget. Carries the last residuals.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& msg, std::vector<double> last_residuals)
        : std::runtime_error(msg), residuals(std::move(last_residuals)) {}
    std::vector<double> residuals;
};

/// A pair set expected to be cyclically monotone is not.
class MonotonicityError : public std::runtime_error {
public:
    explicit MonotonicityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sot
