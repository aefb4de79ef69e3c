#pragma once

#include <stdexcept>
#include <string>

namespace stochflow {

/// Base of every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation requested in a dimension it does not support.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Operation needs a periodic domain (or free space) and got the other.
class UnsupportedDomainError : public Error {
public:
    using Error::Error;
};

/// Too many paths were excluded as non-finite or overflowing.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A quadrature or grid cannot resolve the requested field.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Picard coupling diverged; a smaller time step is needed.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// Growth-rate fit cannot distinguish the field energy from zero.
class IndeterminateRateError : public Error {
public:
    using Error::Error;
};

/// A drift that the requested frame construction cannot encode.
class UnsupportedDriftError : public Error {
public:
    using Error::Error;
};

/// Scenario or schema violation; `field` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what) : Error(what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace stochflow
