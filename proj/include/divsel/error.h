#pragma once

#include <stdexcept>
#include <string>

namespace divsel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad ingestion record (dimension mismatch, duplicate id, empty stream).
class IngestError : public Error {
 public:
  using Error::Error;
};

// Unknown exemplar id or label.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Corrupt, truncated or unreadable persisted file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CompositionError : public Error {
 public:
  using Error::Error;
};

// Verifier could not be reached; the call may be retried.
class TransportError : public Error {
 public:
  using Error::Error;
  bool retryable() const noexcept { return true; }
};

// Verifier replied with something that is not a valid reply payload.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Wraps an error raised inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace divsel
