#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drowsegate {

enum class ErrorCode {
  InvalidInput,
  ParseError,
  UnsupportedCascade,
  FaceTooSmall,
  NoGradients,
  NoInteriorMaximum,
  Unclassifiable,
  OrderingViolation,
  FrameDecodeError,
  InvalidDataset,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure path throws this with a code that
/// callers can branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace drowsegate
