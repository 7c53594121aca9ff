#pragma once

#include <stdexcept>
#include <string>

namespace lhbd {

// Exit codes of the command line front end map onto these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user configuration or command line usage (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing files, malformed inputs, corrupt or mismatched streams (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Bitstream header flags disagree with the models available for decoding.
class ConfigMismatchError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite activations, diverging losses (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lhbd
