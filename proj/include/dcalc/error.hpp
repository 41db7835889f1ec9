#pragma once

#include <stdexcept>
#include <string>

namespace dcalc {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, domain mismatches, unmet preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed its configured size cap.
class CapExceeded : public InputError {
 public:
  using InputError::InputError;
};

/// A numerical routine failed (singular solve, non-finite result).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcalc
