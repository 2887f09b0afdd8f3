#pragma once

#include <stdexcept>
#include <string>

namespace dhl {

// Caller violated an operation's preconditions (mismatched generations,
// non-critical lattice where b = s is required, budget exceeded, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of the function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative evaluation failed to stabilize within its depth budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, long double last, long double previous)
      : std::runtime_error(what), last_(last), previous_(previous) {}

  long double last() const { return last_; }
  long double previous() const { return previous_; }

 private:
  long double last_;
  long double previous_;
};

// Value left the representable range of the working floating type.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

}  // namespace dhl
