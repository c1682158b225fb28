#pragma once

#include <stdexcept>
#include <string>

namespace uniterp {

// Base class for everything the library throws. The CLI maps ArgumentError
// and its subclasses to a usage failure and everything else to a numeric one.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: preconditions, shapes, malformed files, unknown ids.
class ArgumentError : public Error {
public:
  using Error::Error;
};

class ShapeError : public ArgumentError {
public:
  using ArgumentError::ArgumentError;
};

class DomainError : public ArgumentError {
public:
  using ArgumentError::ArgumentError;
};

class FormatError : public ArgumentError {
public:
  using ArgumentError::ArgumentError;
};

// Numerical failures.
class NumericError : public Error {
public:
  using Error::Error;
};

// Two data sites coincide (separation distance zero).
class DegenerateInputError : public NumericError {
public:
  using NumericError::NumericError;
};

class NotSpdError : public NumericError {
public:
  using NumericError::NumericError;
};

class SingularFactorError : public NumericError {
public:
  using NumericError::NumericError;
};

// Raised by the hybrid pipeline when B = L^{-1} P is numerically rank
// deficient; callers should retry with fit_rank_deficient.
class RankDeficientError : public NumericError {
public:
  RankDeficientError(const std::string& what, long rank, long cols)
      : NumericError(what), rank_(rank), cols_(cols) {}
  long rank() const noexcept { return rank_; }
  long cols() const noexcept { return cols_; }

private:
  long rank_;
  long cols_;
};

class TuningError : public NumericError {
public:
  using NumericError::NumericError;
};

class GenerationError : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace uniterp
