#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clickmodel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant (bad record, bad table, bad config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed click-log line. `line()` is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Broken internal contract, e.g. a conditional probability outside [0,1]
/// or a non-monotone EM step.
class InternalFault : public Error {
 public:
  using Error::Error;
};

}  // namespace clickmodel
