#pragma once

#include <stdexcept>
#include <string>

namespace d4 {

// Root of every error raised by the library. Subclasses are grouped by the
// CLI exit code they map to (see tools/d4.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- input / configuration (exit 2) ---------------------------------------

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class MalformedHeader : public ParseError {
 public:
  using ParseError::ParseError;
};

class TruncatedRecord : public ParseError {
 public:
  using ParseError::ParseError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingWord : public Error {
 public:
  using Error::Error;
};

class EmptySetAfterLookup : public Error {
 public:
  using Error::Error;
};

// --- shape (exit 3) -------------------------------------------------------

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// --- numerical / learner failures (exit 4) --------------------------------

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LinearlyDependent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BasisFull : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDirection : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonSymmetric : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptyClass : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroVariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace d4
