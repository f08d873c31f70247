#pragma once

#include <stdexcept>
#include <string>

namespace relight {

/// Bad inputs: violated preconditions, malformed flags, out-of-range values.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem and serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A checkpoint that fails structural validation (truncation, bad magic, ...).
class CorruptCheckpoint : public IoError {
 public:
  explicit CorruptCheckpoint(const std::string& what) : IoError(what) {}
};

/// Training aborted on a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace relight
