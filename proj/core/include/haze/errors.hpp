#pragma once

#include <stdexcept>
#include <string>

namespace haze {

// Base class so callers can catch everything haze throws with one handler.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/extent inconsistencies (mismatched operands, non-positive outputs).
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// A value outside its documented domain (lambda not in [0,1], bad ratio, ...).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// API misuse: missing checkpoint, empty dataset, duplicate tensor name, ...
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Malformed on-disk data. `offset` is the byte position where parsing failed,
// or -1 when it does not apply.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg, long long offset = -1)
      : Error(offset >= 0 ? msg + " (byte " + std::to_string(offset) + ")" : msg),
        offset_(offset) {}
  long long offset() const { return offset_; }

 private:
  long long offset_;
};

// Filesystem failures (unwritable path, missing file).
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Non-finite loss or other numerical breakdown during training.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace haze
