#pragma once

#include <stdexcept>
#include <string>

namespace chdzdt {

// Base of every error raised by the library. The CLI maps the concrete type
// onto an exit code (see ExitCode in tools/).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape/dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An index (token id, class id, row) outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Malformed user input: empty words, bad dataset rows, unknown tags.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (vocab spec, rules file, model/train config).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpointError : public Error {
 public:
  using Error::Error;
};

// Checkpoint is well formed but belongs to a different model configuration.
class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf during training or an undefined statistic.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace chdzdt
