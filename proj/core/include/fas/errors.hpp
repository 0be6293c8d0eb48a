#pragma once

#include <stdexcept>
#include <string>

namespace fas {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid FasConfig or model construction parameters.
class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

// A series or quadrature failed to reach the requested tolerance.
// partial is the best value available when the evaluation stopped.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double partial, double estimate = 0.0)
        : Error(what), partial_(partial), estimate_(estimate) {}
    double partial() const noexcept { return partial_; }
    double estimate() const noexcept { return estimate_; }

private:
    double partial_;
    double estimate_;
};

// An iterative solver did not converge; residual is its last measure of error.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace fas
