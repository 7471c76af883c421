#ifndef GDKIT_ERROR_HPP_
#define GDKIT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gdkit {

enum class ErrorCode {
  kConfigInvalid,
  kUnknownCommand,
  kNonPositiveDepth,
  kNonPositiveScale,
  kOutOfBounds,
  kDegenerateGeometry,
  kNoSharedTracks,
  kSizeMismatch,
  kStreamExhausted,
  kShapeMismatch,
  kNonFiniteLoss,
  kEmptySet,
  kNoGroundTruth,
  kDegenerateCovariance,
  kOutOfRange,
  kCorruptFile,
  kIoError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kUnknownCommand: return "UnknownCommand";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kNonPositiveScale: return "NonPositiveScale";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kNoSharedTracks: return "NoSharedTracks";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kStreamExhausted: return "StreamExhausted";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kNoGroundTruth: return "NoGroundTruth";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // Validation errors come from bad user input or violated preconditions and
  // map to exit code 1; everything else is a runtime failure (exit code 2).
  bool is_validation() const {
    return code_ == ErrorCode::kConfigInvalid ||
           code_ == ErrorCode::kUnknownCommand;
  }

 private:
  ErrorCode code_;
};

}  // namespace gdkit

#endif  // GDKIT_ERROR_HPP_
