#pragma once

#include <stdexcept>
#include <string>

namespace fsodl {

// Bad input: malformed files, invalid configuration, violated preconditions.
// The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while running an otherwise valid computation (divergence, I/O).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fsodl
