// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adomp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lexical or grammatical error; carries the 1-based source position.
class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, const std::string& msg)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": syntax error: " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed text that violates a language rule (undeclared variable,
/// duplicate clause, non-canonical loop, ...).
class SemanticError : public Error {
 public:
  SemanticError(int line, const std::string& msg)
      : Error((line > 0 ? std::to_string(line) + ": " : std::string()) + "semantic error: " + msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A program the differentiation transforms cannot handle.
class TransformError : public Error {
 public:
  using Error::Error;
};

/// Failure while executing a program or using the runtime (tape underflow,
/// out-of-bounds index, misuse of the schedule recorder, ...).
class RuntimeFault : public Error {
 public:
  using Error::Error;
};

}  // namespace adomp
