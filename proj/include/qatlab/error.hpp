#pragma once

#include <stdexcept>
#include <string>

namespace qatlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible (matmul inner dims, elementwise sizes).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument violates an operation's precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A surrogate or slope denominator vanished (|1 + S| or |1 - f'| below 1e-12).
class SingularError : public Error {
 public:
  using Error::Error;
};

/// No closed form exists for the requested surrogate (e.g. RDFS with order >= 1).
class UnsupportedSpecError : public Error {
 public:
  using Error::Error;
};

/// A forward cache no longer matches the model it was produced from.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

}  // namespace qatlab
