#pragma once

#include <stdexcept>
#include <string>

namespace bsplace {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration or command-line input (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced non-finite parameters or loss (CLI exit code 4).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsplace
