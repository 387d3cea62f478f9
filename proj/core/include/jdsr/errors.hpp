#pragma once

#include <stdexcept>
#include <string>

namespace jdsr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or image shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's mathematical domain (e.g. log of a non-positive value).
class DomainError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced by a computation, or a diverged training run.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed or schema-violating configuration. `path` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Missing/unreadable input files or inconsistent data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace jdsr
