#pragma once

#include <stdexcept>
#include <string>

namespace superfractal {

// Precondition violated by caller-supplied parameters or data.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown during a computation (overflow, blow-up, table miss).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace superfractal
