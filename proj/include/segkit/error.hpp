#pragma once

#include <stdexcept>
#include <string>

namespace segkit {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a function (unknown symbol, width mismatch...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A tokenizer, scorer or runner was assembled without what it needs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Gold/predicted corpora or score tables do not line up.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

}  // namespace segkit
