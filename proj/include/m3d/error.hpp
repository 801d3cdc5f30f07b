#pragma once

#include <stdexcept>
#include <string>

namespace m3d {

/// Failure category; the CLI maps these onto exit codes.
enum class ErrorKind {
  usage,      // bad flags or invalid configuration
  input,      // unreadable, missing or malformed input data
  numerical,  // overflow, degenerate model, failed fit or quadrature
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Raised for precondition violations on numeric inputs (e.g. a non-positive
/// sample handed to a lognormal fit).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

class OverflowError : public NumericalError {
 public:
  OverflowError(long long tick, const std::string& what)
      : NumericalError(what + " (tick " + std::to_string(tick) + ")"), tick_(tick) {}

  long long tick() const noexcept { return tick_; }

 private:
  long long tick_;
};

}  // namespace m3d
