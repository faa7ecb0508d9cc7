#pragma once

#include <stdexcept>
#include <string>

namespace recnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree. The message names the offending operand.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (captions, feature files, corpora).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, truncated or version-mismatched checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace recnet
