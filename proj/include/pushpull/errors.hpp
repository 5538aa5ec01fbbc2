#pragma once

#include <stdexcept>
#include <string>

namespace pushpull {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The Slater condition does not hold at the recorded Slater point.
class SlaterViolation : public Error {
 public:
  using Error::Error;
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
};

class MissingSelfLoop : public Error {
 public:
  using Error::Error;
};

class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

/// A run or step precondition (weights, connectivity) failed.
class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class NonStochastic : public Error {
 public:
  using Error::Error;
};

class DegenerateBalance : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  NonFiniteState(long round, const std::string& what)
      : Error("non-finite state at round " + std::to_string(round) + ": " + what), round_(round) {}
  long round() const noexcept { return round_; }

 private:
  long round_;
};

/// Product of row-stochastic weights has not collapsed to rank one yet.
class NotConverged : public Error {
 public:
  explicit NotConverged(double spread)
      : Error("weight product not converged, row spread " + std::to_string(spread)), spread_(spread) {}
  double spread() const noexcept { return spread_; }

 private:
  double spread_;
};

/// Iterative oracle exhausted its budget.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double best_residual)
      : Error(what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace pushpull
