#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mblend {

enum class ErrorCode {
  Parse,
  Io,
  DuplicateId,
  UnknownContentType,
  NonFiniteScore,
  EmptyPool,
  InvalidConfig,
  InvalidLog,
  SupportViolation,
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownContentType: return "UnknownContentType";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidLog: return "InvalidLog";
    case ErrorCode::SupportViolation: return "SupportViolation";
  }
  return "Unknown";
}

/// All library failures are reported through this exception type; `code()`
/// tells callers which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mblend
