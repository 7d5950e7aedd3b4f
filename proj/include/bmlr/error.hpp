#pragma once

#include <stdexcept>
#include <string>

namespace bmlr {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape mismatch between operands.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Invalid configuration value (bad dims, delta outside (0,1), T too small, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Stacked design is numerically rank deficient; carries a condition estimate.
class SingularDesignError : public Error {
public:
    SingularDesignError(const std::string& msg, double condition_estimate)
        : Error(msg), condition_estimate_(condition_estimate) {}
    double condition_estimate() const { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// Noiseless canonical recovery cannot produce an entry (no usable divisor,
/// or input inconsistent with the noiseless model).
class UnrecoverableError : public Error {
public:
    explicit UnrecoverableError(const std::string& msg) : Error(msg) {}
};

/// General noiseless recovery hit a degenerate B (no nonzero entries, or an
/// exactly cancelling divisor sum).
class DegenerateBError : public Error {
public:
    explicit DegenerateBError(const std::string& msg) : Error(msg) {}
};

/// Filesystem / serialization failure; message carries the path.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace bmlr
