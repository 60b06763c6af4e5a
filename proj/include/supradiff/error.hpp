#pragma once

#include <stdexcept>
#include <string>

namespace supradiff {

// Malformed input: wrong shapes, negative weights, unknown ids. CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite intermediate results, overflow, divergent fits. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace supradiff
