#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace camkit {

enum class ErrorCode {
  kShapeMismatch,
  kInvalidArgument,
  kInvalidModel,
  kUnsupportedLayer,
  kUnsupportedArchitecture,
  kBadMagic,
  kTruncated,
  kHeaderParse,
  kPayloadOverrun,
  kOffsetMismatch,
  kBadMaxval,
  kBadMaskValue,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit path) can distinguish them without parsing text.
/// what() is prefixed with the code's name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace camkit
