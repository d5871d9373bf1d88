#pragma once

#include <stdexcept>
#include <string>

namespace heavytail {

// Base of every error raised by the library. Errors fall in two classes:
// usage errors (bad parameters, malformed input) and numeric-regime errors
// (the model or the sample cannot support the requested computation).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_regime_error() const noexcept { return false; }
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class UnsupportedLawError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class RegimeError : public Error {
 public:
  using Error::Error;
  bool is_regime_error() const noexcept override { return true; }
};

class DivergenceError : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

class NoRootError : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

class BracketError : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

class DegenerateSampleError : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

// Not enough exceedances, cycles or skipped draws to form an estimate.
class InsufficientDataError : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

class MinorizationError : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

}  // namespace heavytail
