#pragma once

#include <stdexcept>
#include <string>

namespace iaknn {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (layer geometry, hyper-parameters, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed columns / fields in an input file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Input data violating a domain invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Singular or non-finite numerics.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Optimisation failures (non-finite gradients or losses).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or file format version mismatch.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace iaknn
