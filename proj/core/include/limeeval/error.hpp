#pragma once

#include <stdexcept>
#include <string>

namespace limeeval {

/// Base of every error raised by the toolkit. The CLI maps the concrete
/// subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed bytes: bad magic, unsupported version, truncation, trailing data.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (range, uniqueness, finiteness).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Shapes of two operands disagree.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Caller misuse: empty inputs, too few samples, missing arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Correlation requested on a series with zero variance.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Service refused a request because the referenced session is unknown or
/// expired.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Service refused a second vote on an already-voted session.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Service cannot start with the given configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_io_error(const std::string& what, const std::string& path);

}  // namespace limeeval
