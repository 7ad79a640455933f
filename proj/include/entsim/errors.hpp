#pragma once

#include <stdexcept>
#include <string>

namespace entsim {

/// Invalid physical parameter or state passed to an operation.
class DomainError : public std::invalid_argument {
public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Bad configuration: missing fields, unknown keys, inconsistent geometry.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (quadrature non-convergence, degenerate statistics).
/// Carries the residual achieved when applicable.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

}  // namespace entsim
