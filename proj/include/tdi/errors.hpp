#pragma once

#include <stdexcept>
#include <string>

namespace tdi {

/// Argument outside the mathematical domain of an operation, or mismatched shapes.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A surface lies beyond the time span covered by the histogram.
class SpanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimization hit a non-finite value.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration file or value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tdi
