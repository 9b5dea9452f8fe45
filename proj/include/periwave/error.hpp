#pragma once

#include <stdexcept>
#include <string>

namespace periwave {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent use of the API (grid mismatch, rank-deficient input, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Newton Jacobian singular on the even subspace.
class BifurcationError : public Error {
 public:
  using Error::Error;
};

/// Newton iterate collapsed onto a constant state.
class DegenerateBranchError : public Error {
 public:
  using Error::Error;
};

class NearSingularError : public Error {
 public:
  using Error::Error;
};

/// Right-hand side with a kernel component that cannot be solved for.
class IncompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse for a closed-form or series representation.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class NotApplicableError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Solver failure inside a continuation sweep, tagged with the parameter value.
class ContinuationError : public Error {
 public:
  ContinuationError(double parameter, const std::string& what)
      : Error("continuation failed at parameter " + std::to_string(parameter) +
              ": " + what),
        parameter_(parameter) {}

  double parameter() const noexcept { return parameter_; }

 private:
  double parameter_;
};

}  // namespace periwave
