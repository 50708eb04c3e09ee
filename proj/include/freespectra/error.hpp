#pragma once

#include <stdexcept>
#include <string>

namespace fsp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class SizeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation does not hold.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A matrix lacks a structural property (Hermitian, square, ...).
class StructureError : public Error {
 public:
  using Error::Error;
};

// A pencil or resolvent was evaluated at a point of the spectrum.
class SpectralPointError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A linear solve was attempted on a numerically singular matrix.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double rcond)
      : Error(what + " (reciprocal condition estimate " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

// The subordination fixed point was not reached.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double residual, int iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

// A recovered density went negative beyond round-off.
class SolverQualityError : public Error {
 public:
  using Error::Error;
};

// Text input could not be parsed. Line and column are 1-based; line is 0
// for single-line inputs such as polynomial strings.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(format(what, line, column)), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    if (line > 0) {
      return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
    }
    return "position " + std::to_string(column) + ": " + what;
  }
  int line_;
  int column_;
};

}  // namespace fsp
