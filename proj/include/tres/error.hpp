#pragma once

#include <stdexcept>
#include <string>

namespace tres {

/// Bad argument values: empty stacks, negative bandwidths, mismatched shapes.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A transform whose linear part cannot be inverted.
class InvalidTransform : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tres
