#pragma once

#include <stdexcept>
#include <string>

namespace miniaxie {

// Invalid team, config file, digest mismatch, missing checkpoint. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated a precondition (illegal action, bad dimensions, stepping a
// terminal state). CLI exit code 2.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed action matrix or inconsistent digits.
class CodecError : public UsageError {
 public:
  explicit CodecError(const std::string& msg) : UsageError(msg) {}
};

// Corrupt, truncated or architecture-incompatible parameter blob.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or gradient during optimization.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Legal action set larger than the configured cap.
class EnumerationOverflowError : public std::runtime_error {
 public:
  explicit EnumerationOverflowError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed metrics stream, dataset file or report.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace miniaxie
