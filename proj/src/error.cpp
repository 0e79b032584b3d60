#include "camkit/error.hpp"

namespace camkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInvalidModel: return "invalid model";
    case ErrorCode::kUnsupportedLayer: return "unsupported layer";
    case ErrorCode::kUnsupportedArchitecture: return "unsupported architecture";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kHeaderParse: return "header parse error";
    case ErrorCode::kPayloadOverrun: return "payload overrun";
    case ErrorCode::kOffsetMismatch: return "offset mismatch";
    case ErrorCode::kBadMaxval: return "bad maxval";
    case ErrorCode::kBadMaskValue: return "bad mask value";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

}  // namespace camkit
