// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace seal {

/// Broad failure classes. The CLI maps each onto a distinct exit code.
enum class ErrorKind {
  config,        // bad user input or configuration
  precondition,  // shapes, indices, architecture requirements
  numeric,       // degenerate values, non-convergence, non-finite results
  format,        // malformed or truncated files
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
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::config, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::precondition, what) {}
};

/// Raised for shape mismatches anywhere in the engine.
class ShapeError : public PreconditionError {
 public:
  explicit ShapeError(const std::string& what) : PreconditionError(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::format, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::format:
      return 2;
    case ErrorKind::precondition:
      return 3;
    case ErrorKind::numeric:
      return 4;
  }
  return 1;
}

}  // namespace seal
