#pragma once

#include <stdexcept>
#include <string>

namespace srcount {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  io = 3,
  divergence = 4,
  corruption = 5,
};

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, ExitCode::config) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what, ExitCode::config) {}
};

// More sources than the array can resolve.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(what, ExitCode::config) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::config) {}
};

// Inconsistent data: label out of range, feature width mismatch.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, ExitCode::config) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, ExitCode::io) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(what, ExitCode::divergence) {}
};

class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what) : Error(what, ExitCode::corruption) {}
};

}  // namespace srcount
