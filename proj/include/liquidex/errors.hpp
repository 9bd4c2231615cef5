#pragma once

#include <stdexcept>
#include <string>

namespace liquidex {

/// Base class for all liquidex errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Model or experiment parameters violate their domain (lambda <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A time argument lies outside [0, T].
class TimeDomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation at t = T of a quantity that diverges at the horizon.
class PoleError : public Error {
public:
    using Error::Error;
};

/// Mismatched path lengths or otherwise malformed inputs.
class InputError : public Error {
public:
    using Error::Error;
};

/// Overflow, loss of positive definiteness, or other numeric failure.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A linear system was too ill-conditioned to trust. Carries the estimate.
class ConditioningError : public NumericError {
public:
    ConditioningError(const std::string& what, double condition_estimate)
        : NumericError(what), condition_estimate_(condition_estimate) {}
    double condition_estimate() const { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// A strategy handed to an evaluator is inadmissible for the requested objective.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Bad or unknown configuration keys/values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure while writing outputs.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace liquidex
