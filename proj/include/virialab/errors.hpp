#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace virialab {

/// Base class for every error raised by the library. Each subclass carries a
/// stable exit code so the command line tool can map failures without
/// inspecting messages.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const noexcept { return 1; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class NotApplicableError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

class UnsupportedParameterError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 6; }
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 7; }
};

/// Non-finite particle position; the time step is too large.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  int exit_code() const noexcept override { return 8; }

 private:
  std::size_t step_;
};

/// Negative density in the macroscopic solver.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  int exit_code() const noexcept override { return 9; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 10; }
};

}  // namespace virialab
