#pragma once

#include <stdexcept>
#include <string>

namespace qnewton {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A pivot fell below the singularity threshold during LU factorization.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Cholesky met a non-positive pivot, or an eigenvalue was <= 0.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// The classical solver is cheaper for every condition number.
class NoCrossover : public Error {
 public:
  using Error::Error;
};

class CalibrationFailed : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  using Error::Error;
};

/// A regularized layer Hessian could not be factorized; a larger
/// epsilon_reg usually fixes it.
class SingularHessian : public Error {
 public:
  using Error::Error;
};

class BadMagic : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qnewton
