#pragma once

#include <stdexcept>
#include <string>

namespace gsum {

/// Input violates an operation's precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A construction that the math guarantees to succeed did not (numerical
/// breakdown, exhausted iteration cap, ...).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gsum
