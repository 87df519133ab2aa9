#pragma once

#include <stdexcept>
#include <string>

namespace pba {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed structurally invalid arguments (dimension mismatch, unknown id, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A belief specification violates its invariants (asymmetry, indefiniteness, ...).
class SpecificationError : public Error {
public:
    using Error::Error;
};

// Moment estimation cannot proceed (too few replicates / members).
class EstimationError : public Error {
public:
    using Error::Error;
};

// Numerical failure inside a fit or sampler (conditioning, collinearity, mixing).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Invalid run configuration or persisted artifact.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace pba
