#ifndef RAGPOISON_ERROR_HPP_
#define RAGPOISON_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ragpoison {

// Base of every error the library throws on purpose. The CLI maps the
// concrete subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record (JSONL line, config document, transcript).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Well-formed input that violates a data invariant (duplicate id, dim mismatch).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Persisted store that is missing, truncated or fails its checksum.
class StoreError : public Error {
 public:
  StoreError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  explicit StoreError(const std::string& what) : Error(what) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_ = 0;
};

// A model or embedding endpoint failed, or lacks a capability we need.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Model output did not follow the structured response contract.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}

  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// Bad configuration value or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ragpoison

#endif  // RAGPOISON_ERROR_HPP_
