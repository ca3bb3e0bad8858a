#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadkit {

enum class ErrorCode {
  MissingFile,
  UnsupportedFormat,
  ZeroDimension,
  IoFailure,
  ZeroTileSize,
  UnknownColor,
  DegeneratePath,
  EmptySegment,
  SegmentOutsideMask,
  InvalidThresholds,
  InvalidConfig,
  Timeout,
  MalformedResponse,
  NonFiniteScore,
  ProviderUnavailable,
  NoGradeFound,
  AllWeightsZero,
  UngradedSegment,
  EmptyMatrix,
  ShapeMismatch,
  ParseError,
  InvalidGrade,
  TooFewPoints,
  EmptyCatalog,
  DegenerateLine,
  InvalidWidth,
  EmptyDirectory,
  UnknownSubcommand,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roadkit
