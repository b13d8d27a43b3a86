#pragma once

#include <stdexcept>
#include <string>

namespace kropina {

/// Bad input: wrong dimensions, non-unit wind, malformed documents. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that could not complete: singular metric, failed shooting,
/// chart exit. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kropina
