#pragma once

#include <stdexcept>
#include <string>

namespace vcd {

enum class ErrorKind {
  Sizing,
  OpticalConfig,
  Resolution,
  IllConditioned,
  Precondition,
  DimensionMismatch,
  PoseOutOfRange,
  NoFace,
  UndefinedCorrelation,
  Detector,
  Validation,
  Io,
  Usage,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so front ends can map
/// it to an exit code or an HTTP status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace vcd
