#pragma once

#include <stdexcept>
#include <string>

namespace fracrt {

/// Argument outside the mathematical domain of an operation (e.g. the kernel singularity).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration: rejected before any simulation starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Adaptive quadrature or root bracketing did not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracrt
