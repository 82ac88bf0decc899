#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bishop {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, out-of-range values, inconsistent flags.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value it could not recover from.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bishop
