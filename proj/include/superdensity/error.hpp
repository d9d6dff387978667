#pragma once

#include <stdexcept>
#include <string>

namespace superdensity {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(int expected, int got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A theorem hypothesis does not hold; the message names the inequality.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// mu(B_r(x)) vanished where a point of the support was required.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ConstructionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace superdensity
