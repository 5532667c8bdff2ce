#pragma once

#include <stdexcept>
#include <string>

namespace cotlearn {

// Malformed input, bad arguments, or an out-of-range request. CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A brute-force or enumeration guard would be exceeded.
class GuardExceeded : public InputError {
 public:
  using InputError::InputError;
};

// No member of the hypothesis family is consistent with the data.
class NotRealizable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant failed (e.g. a learned hypothesis does not re-verify).
// CLI exit code 1.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cotlearn
