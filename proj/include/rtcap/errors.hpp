#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rtcap {

/// Input outside an operation's domain.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A utilization reached the pole of the stage delay bound (vq >= 1).
class PoleError : public std::domain_error {
public:
    explicit PoleError(double vq);
    double utilization() const noexcept { return vq_; }

private:
    double vq_;
};

/// Root solve failed to reach tolerance; carries the final bracket.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double lo, double hi, double residual, int iterations);
    double lo;
    double hi;
    double residual;
    int iterations;
};

/// Some nodes cannot reach any sink.
class RoutingError : public std::runtime_error {
public:
    explicit RoutingError(std::vector<int> unreachable);
    const std::vector<int>& unreachable() const noexcept { return unreachable_; }

private:
    std::vector<int> unreachable_;
};

/// Broken simulator invariant (event time going backwards, exclusion violated).
class SimulationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rtcap
