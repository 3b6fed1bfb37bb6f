#pragma once

#include <stdexcept>
#include <string>

namespace cnm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Argument or configuration outside the documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Data that cannot support the requested statistic (e.g. zero spread).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

/// A numerical self-check failed inside the library.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cnm
