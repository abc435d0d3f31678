#pragma once

#include <stdexcept>
#include <string>

namespace atinf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the expression parser; carries a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Evaluation left the natural domain of some node (log of a nonpositive
/// value, division by zero, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold for the input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A problem document does not match the schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace atinf
