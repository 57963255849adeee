#pragma once

#include <stdexcept>
#include <string>

namespace ctxprobe {

/// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kBackend = 3,
  kData = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; `field()` names the offending config key when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string field = {})
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

/// Transport failure that persisted through all retries.
class TransportError : public BackendError {
 public:
  TransportError(const std::string& message, int attempts)
      : BackendError(message + " (after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// The backend answered with a non-retryable HTTP status.
class RefusalError : public BackendError {
 public:
  RefusalError(const std::string& message, int status)
      : BackendError(message + " (HTTP " + std::to_string(status) + ")"), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// The backend cannot provide a required feature (logprob echo, tokenizer, ...).
class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace ctxprobe
