#pragma once

#include <stdexcept>
#include <string>

namespace thermolab {

enum class ErrorKind {
  invalid_argument,
  invalid_symbol,
  depth_underflow,
  insufficient_depth,
  depth_mismatch,
  stability,
  capacity,
  not_converged,
  zero_mass,
  inconsistent,
  parse,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace thermolab
