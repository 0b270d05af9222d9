#ifndef BNLIMITS_ERRORS_HPP
#define BNLIMITS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bnl {

// Input outside the stated domain of a formula (e.g. Lemma preconditions).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Request exceeds a brute-force enumeration limit.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: wrong ensemble kind, mismatched dimensions, invalid structure.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bnl

#endif
