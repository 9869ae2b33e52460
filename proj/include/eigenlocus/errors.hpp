#pragma once

#include <stdexcept>
#include <string>

namespace eigenlocus {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Precondition failures on user-supplied data (single class, empty input, bad parameters).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped at its iteration cap. `residual` is the last residual seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class EmptyActiveSet : public Error {
 public:
  EmptyActiveSet() : Error("empty active set") {}
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace eigenlocus
