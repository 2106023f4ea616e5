#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlop {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input / unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

// CSV content that cannot be turned into a point cloud. Row and column are
// 1-based; zero means "not applicable".
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column);
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// Invalid configuration or violated precondition on user-supplied inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Base for failures that happen while computing (as opposed to bad input).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateSketchError : public NumericalError {
 public:
  DegenerateSketchError(std::size_t requested, std::size_t achieved_rank);
  std::size_t requested() const { return requested_; }
  std::size_t achieved_rank() const { return achieved_rank_; }

 private:
  std::size_t requested_;
  std::size_t achieved_rank_;
};

class UnreachableSupportError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CoincidentPointsError : public NumericalError {
 public:
  explicit CoincidentPointsError(double distance);
  double distance() const { return distance_; }

 private:
  double distance_;
};

}  // namespace mlop
