#pragma once

#include <stdexcept>
#include <string>

namespace wbrel {

/// Failure categories mirror the CLI exit codes.
enum class ErrorKind { usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Argument outside a function's mathematical domain (t <= 0 for a density, ...).
struct DomainError : NumericalError {
  explicit DomainError(const std::string& what) : NumericalError(what) {}
};

/// An iterative solver could not bracket or reach its target.
struct ConvergenceError : NumericalError {
  explicit ConvergenceError(const std::string& what) : NumericalError(what) {}
};

}  // namespace wbrel
