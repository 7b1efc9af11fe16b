#pragma once

#include <stdexcept>
#include <string>

namespace sfcca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: shapes, dimensions, non-SPD values, file syntax.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-convergence, rank deficiency, singular covariance.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfcca
