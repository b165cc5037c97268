#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace avdn {

enum class ErrorCode {
  InvalidArgument,
  ZeroDisplacement,
  AltitudeOutOfRange,
  WidthOutOfRange,
  OutOfBounds,
  IndexOutOfRange,
  NoFeasibleStart,
  SchemaViolation,
  EmptyGroundTruth,
  EmptyResults,
  DegenerateReference,
  ArityMismatch,
  ProtocolViolation,
  ReplayDivergence,
  UnknownEnvironment,
  UnknownEpisode,
  UnknownSession,
  IoError,
};

inline std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroDisplacement: return "ZeroDisplacement";
    case ErrorCode::AltitudeOutOfRange: return "AltitudeOutOfRange";
    case ErrorCode::WidthOutOfRange: return "WidthOutOfRange";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoFeasibleStart: return "NoFeasibleStart";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::DegenerateReference: return "DegenerateReference";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::ReplayDivergence: return "ReplayDivergence";
    case ErrorCode::UnknownEnvironment: return "UnknownEnvironment";
    case ErrorCode::UnknownEpisode: return "UnknownEpisode";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and meant for programmatic handling; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Dataset content that does not match the episode schema. `pointer` is a
/// JSON pointer into the offending record; `line` is 1-based in JSONL input
/// (0 when not applicable).
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string pointer, const std::string& what, std::size_t line = 0)
      : Error(ErrorCode::SchemaViolation,
              (line ? "line " + std::to_string(line) + ": " : std::string()) + pointer + ": " + what),
        pointer_(std::move(pointer)),
        line_(line) {}

  const std::string& pointer() const noexcept { return pointer_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string pointer_;
  std::size_t line_;
};

}  // namespace avdn
