// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_ERROR_HPP
#define GNATROM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gnatrom {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclass onto its process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible vector/matrix sizes or an out-of-range index.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce a result (singular system, divergence, ...).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File was readable but its content is not a valid artifact.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace gnatrom

#endif  // GNATROM_ERROR_HPP
