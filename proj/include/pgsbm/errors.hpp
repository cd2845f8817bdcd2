#pragma once

#include <stdexcept>
#include <string>

namespace pgsbm {

/// Malformed or inconsistent input data (bad files, mismatched node sets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or generator settings supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linear algebra or iterative-solver failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pgsbm
