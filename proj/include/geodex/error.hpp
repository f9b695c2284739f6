#pragma once

#include <stdexcept>
#include <string>

namespace geodex {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or stencil left the chart domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Metric not positive definite.
class SignatureError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity showed up in an evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver (integrator, Newton) failed.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Too few scales above the noise floor to fit a convergence slope.
class InsufficientSignal : public Error {
 public:
  using Error::Error;
};

/// Input violates an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; `path` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace geodex
