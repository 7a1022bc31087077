#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace obstacle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidSize : public Error {
public:
  using Error::Error;
};

/// Inconsistent decomposition or experiment parameters.
class ConfigError : public Error {
public:
  using Error::Error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// Evaluation point outside the closed unit square.
class DomainError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class Unsupported : public Error {
public:
  using Error::Error;
};

/// A free DOF not reachable from any local space.
class DecompositionError : public Error {
public:
  using Error::Error;
};

/// A precondition on the iterate (feasibility) does not hold.
class ContractViolation : public Error {
public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap. Carries the last iterate.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string &what, Eigen::VectorXd last, double residual = 0.0)
      : Error(what), last_iterate_(std::move(last)), residual_(residual) {}

  const Eigen::VectorXd &last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

private:
  Eigen::VectorXd last_iterate_;
  double residual_;
};

/// The positivity-preserving construction failed its vertex sweep.
class ConstructionError : public Error {
public:
  ConstructionError(const std::string &what, int vertex_i, int vertex_j)
      : Error(what), vertex_i_(vertex_i), vertex_j_(vertex_j) {}

  /// Fine-grid indices of the offending vertex (-1 if not vertex related).
  int vertex_i() const noexcept { return vertex_i_; }
  int vertex_j() const noexcept { return vertex_j_; }

private:
  int vertex_i_;
  int vertex_j_;
};

} // namespace obstacle
