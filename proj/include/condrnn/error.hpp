#pragma once

#include <stdexcept>
#include <string>

namespace condrnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor extents do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter or option value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Reduction or conditioning over an empty set.
class EmptySetError : public Error {
public:
    using Error::Error;
};

/// Random combination generation ran out of retries.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// A sensor has no observations in the training split.
class CoverageError : public Error {
public:
    using Error::Error;
};

/// Dataset files missing or malformed.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Checkpoint container could not be read or does not match expectations.
class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace condrnn
