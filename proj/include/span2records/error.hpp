#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace span2records {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Errors caused by the content of input data (spans, payloads, logs, traces).
class DataError : public Error {
 public:
  using Error::Error;
};

class InvalidSpan : public DataError {
 public:
  explicit InvalidSpan(std::string reason)
      : DataError("invalid span: " + reason), reason_(std::move(reason)) {}

  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

// `position` is a JSON pointer for the JSON mapping and a byte offset for
// the binary encoding.
class MalformedPayload : public DataError {
 public:
  MalformedPayload(std::string position, std::string reason)
      : DataError("malformed OTLP payload at " + position + ": " + reason),
        position_(std::move(position)),
        reason_(std::move(reason)) {}

  const std::string& position() const noexcept { return position_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string position_;
  std::string reason_;
};

class UnknownRecordKey : public DataError {
 public:
  UnknownRecordKey(std::string key, std::size_t line)
      : DataError("unknown record key '" + key + "' at line " +
                  std::to_string(line)),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

class FieldCountMismatch : public DataError {
 public:
  FieldCountMismatch(std::size_t line, std::size_t expected, std::size_t actual)
      : DataError("line " + std::to_string(line) + ": expected " +
                  std::to_string(expected) + " fields, got " +
                  std::to_string(actual)),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumberParseError : public DataError {
 public:
  NumberParseError(std::size_t line, std::string field)
      : DataError("line " + std::to_string(line) + ": cannot parse field '" +
                  field + "' as a number"),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Raised when records cannot form a trace at all (e.g. eoi values are not
// 0..n-1), independent of the reconstruction mode.
class InvalidTraceRecords : public DataError {
 public:
  using DataError::DataError;
};

// Synchronous reconstruction failed; the trace needs asynchronous mode.
class InvalidSynchronousTrace : public DataError {
 public:
  InvalidSynchronousTrace(std::int32_t eoi, std::string reason)
      : DataError("invalid synchronous trace at eoi " + std::to_string(eoi) +
                  ": " + reason),
        eoi_(eoi),
        reason_(std::move(reason)) {}

  std::int32_t eoi() const noexcept { return eoi_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::int32_t eoi_;
  std::string reason_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace span2records
