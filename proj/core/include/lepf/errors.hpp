#pragma once

#include <stdexcept>
#include <string>

namespace lepf {

/// Raised when inputs violate a documented precondition (bad model, bad scheme
/// parameters, malformed files). Maps to exit code 1 in the CLI.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a runtime invariant is broken during a computation (for example
/// the effective sample size dropping below 1/m). Maps to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when an exact computation would exceed its enumeration budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a quantity under- or overflows beyond what can be represented.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lepf
