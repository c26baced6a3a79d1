#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmpc {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A rollout or simulation produced a non-finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int step, double time = std::nan(""))
        : Error(what), step_(step), time_(time) {}

    /// Rollout step at which the state became non-finite (-1 if not a rollout).
    int step() const noexcept { return step_; }
    /// Simulation time of the failure (NaN if not a simulation).
    double time() const noexcept { return time_; }

private:
    int step_;
    double time_;
};

/// The strong-convexity requirement on the horizon cost failed: the Hesse
/// matrix of V with respect to U is not positive definite where it must be.
class AssumptionViolation : public Error {
public:
    AssumptionViolation(const std::string& what, double min_eigenvalue,
                        double time = std::nan(""))
        : Error(what), min_eigenvalue_(min_eigenvalue), time_(time) {}

    double min_eigenvalue() const noexcept { return min_eigenvalue_; }
    double time() const noexcept { return time_; }

private:
    double min_eigenvalue_;
    double time_;
};

/// Newton iteration on the optimality residual did not reach tolerance.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// The quadratic form delta_s' M delta_s came out non-positive for a nonzero
/// perturbation, contradicting positive definiteness of the metric.
class MetricViolation : public Error {
public:
    MetricViolation(const std::string& what, double value, double time)
        : Error(what), value_(value), time_(time) {}

    double value() const noexcept { return value_; }
    double time() const noexcept { return time_; }

private:
    double value_;
    double time_;
};

}  // namespace cmpc
