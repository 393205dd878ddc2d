#pragma once

#include <stdexcept>
#include <string>

namespace autohas {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: configs, search spaces, out-of-range hyperparameters.
// The CLI maps this to exit status 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Shape mismatches, non-finite values and other failures inside numeric code.
class NumericsError : public Error {
 public:
  using Error::Error;
};

// File system, parse, format-version and digest failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace autohas
