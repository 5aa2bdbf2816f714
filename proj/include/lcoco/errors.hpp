#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lcoco {

/// Inputs with mismatched dimensions or malformed matrices.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller supplied arguments outside an operation's contract.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A convex set that was required to be nonempty is empty.
class InfeasibleSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The feedback protocol was violated (query before commit, missing inputs, ...).
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Inputs for which an update formula is undefined (e.g. a zero gradient norm).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method failed to converge. Carries the last iterate and residual.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Eigen::VectorXd iterate, double residual)
      : std::runtime_error(what), iterate_(std::move(iterate)), residual_(residual) {}

  const Eigen::VectorXd& iterate() const noexcept { return iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd iterate_;
  double residual_;
};

}  // namespace lcoco
