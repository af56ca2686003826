#pragma once

#include <stdexcept>
#include <string>

namespace streamint {

/// Root of every error the library raises. The CLI maps subclasses onto
/// process exit codes (config → 2, numerical → 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidDistribution : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, long suggested_servers)
      : NumericalError(what), suggested_servers_(suggested_servers) {}
  long suggested_servers() const noexcept { return suggested_servers_; }

 private:
  long suggested_servers_;
};

class NoSolutionError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

}  // namespace streamint
