#pragma once

#include <stdexcept>
#include <string>

namespace fracint {

/// Bad input: malformed literal, violated precondition, out-of-range parameter.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A numeric result could not be produced (overflow, unreachable tolerance).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracint
