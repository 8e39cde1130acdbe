#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinorbit {

/// Thrown when an argument violates an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for topological charges whose q-plate output would leave the
/// two-dimensional |m| = 1 orbital subspace this library models.
class UnsupportedCharge : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Thrown when an estimator is asked to work with no counts at all.
class NoData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on malformed input documents; carries the 1-based source line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace spinorbit
