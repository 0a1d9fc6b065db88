#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace padx {

// Root of every error thrown by the library. Subclasses let callers (the CLI
// in particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something malformed: bad arguments, bad shapes, bad files.
class InputError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class IntegrityError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

// Blend region touches the target border, so the Dirichlet ring is missing.
class BoundaryError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public Error {
 public:
  IoError(const std::string& msg, std::string path)
      : Error(msg), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A tail patch cannot be placed over the chosen host.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace padx
