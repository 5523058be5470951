#pragma once

#include <stdexcept>
#include <string>

namespace rgamlss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Observation outside the support, or a parameter outside its admissible range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input: dimension mismatch, missing covariate, bad configuration.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator ran out of its panel budget.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// A runtime check of a structural condition failed (e.g. a Hessian that
/// should be positive definite is not).
class ConditionViolation : public Error {
public:
    using Error::Error;
};

/// An iterative procedure did not converge and the caller asked for a hard failure.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace rgamlss
