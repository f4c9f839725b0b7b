#pragma once

#include <stdexcept>
#include <string>

namespace likstab {

/// Bad user input: malformed config, unknown names, sizes out of range.
/// The CLI maps this family to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter or observation outside the model's support.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-convergence, singular information, failed replicates.
/// The CLI maps this family to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace likstab
