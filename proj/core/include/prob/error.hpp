#pragma once

#include <stdexcept>
#include <string>

namespace prob {

// Violated operation precondition (bad dimensions, negative sizes, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid user-supplied configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or incompatible persisted file.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lifecycle violation in the open-world protocol (missing predecessor, ...).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prob
