#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zsic {

/// Base for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse: bad arguments, violated preconditions, wrong call order.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be used (malformed files, dangling references, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ReferenceError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// A linear solve or other numerical kernel failed.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace zsic
