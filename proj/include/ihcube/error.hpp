#pragma once

#include <stdexcept>
#include <string>

namespace ihcube {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched descriptor layouts, bad dimension specs, unknown dimensions.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A request or argument failed validation. `field` names the offending
// input (a JSON path for API requests), empty when not applicable.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// The combination is well-formed but not supported (e.g. error bounds for
// a holistic measure).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Unreadable input data: missing columns, no usable rows.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Index file problems: bad magic, version mismatch, checksum, truncation.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ihcube
