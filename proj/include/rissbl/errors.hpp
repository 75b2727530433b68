#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rissbl {

/// Invalid scenario, sweep or CLI configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument is outside the mathematical domain of an operation
/// (non-Hermitian input, non-positive variance, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cholesky factorization failed. `leading_minor()` is the order of the first
/// leading principal minor that is not positive definite (1-based).
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(std::ptrdiff_t leading_minor)
      : std::runtime_error("matrix is not positive definite: leading minor of order " +
                           std::to_string(leading_minor) + " is not positive"),
        minor_(leading_minor) {}

  std::ptrdiff_t leading_minor() const noexcept { return minor_; }

 private:
  std::ptrdiff_t minor_;
};

/// A solver produced a non-finite ELBO or estimate.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// A metric is undefined for its inputs (e.g. NMSE against an all-zero channel).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace rissbl
