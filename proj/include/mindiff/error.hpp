#pragma once

#include <stdexcept>
#include <string>

namespace mindiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value (kernel length, fraction, sweep grid, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Shapes of matrices/vectors/parameters do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required, or training divergence.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Dataset files could not be read or produced no usable rows.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// A metric was requested on input it is not defined for.
class MetricError : public Error {
public:
    using Error::Error;
};

}  // namespace mindiff
