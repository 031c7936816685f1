#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttsc {

enum class ErrorCode {
  kInvalidPath,
  kNoCandidates,
  kInvalidSampleSize,
  kEnumerationTooLarge,
  kEmptyBatch,
  kFitDegenerate,
  kDomainError,
  kAssumptionError,
  kEmptyInput,
  kIoError,
  kParseError,
  kConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidPath: return "InvalidPath";
    case ErrorCode::kNoCandidates: return "NoCandidates";
    case ErrorCode::kInvalidSampleSize: return "InvalidSampleSize";
    case ErrorCode::kEnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kFitDegenerate: return "FitDegenerate";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kAssumptionError: return "AssumptionError";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ttsc
