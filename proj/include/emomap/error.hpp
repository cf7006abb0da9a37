#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace emomap {

// Error classes double as CLI exit codes.
enum class ErrorClass : int {
  parse = 2,
  io = 3,
  validation = 4,
  numeric = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorClass::validation, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorClass::numeric, what) {}
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Container parse failure; `offset` is the byte position in the file.
class FormatError : public IoError {
 public:
  enum class Kind { malformed_header, channel_count_mismatch, truncated_frames, invalid_content };

  FormatError(Kind kind, std::uint64_t offset, const std::string& what)
      : IoError(what + " (at byte " + std::to_string(offset) + ")"), kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

}  // namespace emomap
