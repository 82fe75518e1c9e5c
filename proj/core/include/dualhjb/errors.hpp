#pragma once

#include <stdexcept>
#include <string>

namespace dualhjb {

/// Argument outside the mathematical domain of an operation (negative wealth, t > T, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative solver hit its iteration cap or could not certify its answer.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A root bracket could not be expanded far enough.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Malformed or inconsistent model input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simulated path violated a model constraint (control outside the cone).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested quantity does not exist for this model (e.g. curvature at a kink).
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dualhjb
