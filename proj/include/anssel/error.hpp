#pragma once

#include <stdexcept>
#include <string>

namespace anssel {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto process exit codes (config → 1, data → 2, numerical → 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (corpora, vocab files, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or parameter.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace anssel
