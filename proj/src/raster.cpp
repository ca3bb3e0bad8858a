#include "roadkit/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace roadkit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ZeroTileSize: return "ZeroTileSize";
    case ErrorCode::UnknownColor: return "UnknownColor";
    case ErrorCode::DegeneratePath: return "DegeneratePath";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::SegmentOutsideMask: return "SegmentOutsideMask";
    case ErrorCode::InvalidThresholds: return "InvalidThresholds";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::NoGradeFound: return "NoGradeFound";
    case ErrorCode::AllWeightsZero: return "AllWeightsZero";
    case ErrorCode::UngradedSegment: return "UngradedSegment";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidGrade: return "InvalidGrade";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyCatalog: return "EmptyCatalog";
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::InvalidWidth: return "InvalidWidth";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

BinaryMask::BinaryMask(int width, int height, double resolution_m)
    : Grid<std::uint8_t>(width, height, 0) {
  set_resolution_m(resolution_m);
}

void BinaryMask::set_resolution_m(double resolution_m) {
  if (!(resolution_m > 0.0) || !std::isfinite(resolution_m)) {
    throw Error(ErrorCode::InvalidConfig, "resolution_m must be positive and finite");
  }
  resolution_m_ = resolution_m;
}

std::size_t BinaryMask::count() const noexcept {
  const auto v = values();
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](std::uint8_t b) { return b != 0; }));
}

std::vector<Pixel> BinaryMask::pixels() const {
  std::vector<Pixel> out;
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      if ((*this)(x, y) != 0) out.push_back({x, y});
    }
  }
  return out;
}

std::string_view grade_name(Grade g) noexcept {
  switch (g) {
    case Grade::High: return "high";
    case Grade::Medium: return "medium";
    case Grade::Low: return "low";
  }
  return "low";
}

std::optional<Grade> grade_from_name(std::string_view name) noexcept {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Grade g : kGrades) {
    if (lower == grade_name(g)) return g;
  }
  return std::nullopt;
}

BinaryMask road_pixels(const GradeMask& grades, double resolution_m) {
  BinaryMask mask(grades.width(), grades.height(), resolution_m);
  const auto src = grades.values();
  auto dst = mask.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != Label::Background ? 1 : 0;
  return mask;
}

}  // namespace roadkit
