#pragma once

#include <stdexcept>
#include <string>

namespace qspiral {

/// Input field contains non-finite values or has inconsistent sizes.
class InvalidField : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a physical relation (negative density, bad grid...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A solver could not complete: NaN, blow-up, step-size underflow.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shooting bracket without a classifier sign change.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace qspiral
