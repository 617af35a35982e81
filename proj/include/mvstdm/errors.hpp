#pragma once

#include <stdexcept>
#include <string>

namespace mvstdm {

// Error families map one-to-one onto CLI exit codes (1, 2, 3).

/// Invalid input, configuration or argument (exit code 1).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation, e.g. kappa <= 0.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Request exceeding a hard resource guard (grid level, sizes).
class ResourceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Factorization failure or loss of positive definiteness (exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or parse failure (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mvstdm
