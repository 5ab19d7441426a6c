#pragma once

#include <stdexcept>
#include <string>

namespace pipestab {

// Base class for every domain error raised by the library. The CLI maps
// NumericalFailure to exit status 3 and everything else derived from Error
// to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or singular physical / controller parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a mathematical function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (sample counts, matrix shapes, non-SPD weights).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration file or simulation settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The simulator produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

// The SDP solver could not converge.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace pipestab
