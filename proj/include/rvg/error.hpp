#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (dimension mismatch, K > N, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Zero-area or otherwise unusable geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 means "not line specific".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rvg
