#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xyep {

// Invalid topology, config, or hyperparameters supplied by the caller.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (dimension mismatch, missing targets).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Out-of-range values in otherwise well-formed data.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Non-finite values appeared during a computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xyep
