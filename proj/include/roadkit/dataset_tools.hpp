#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadkit/geometry.hpp"
#include "roadkit/raster.hpp"

namespace roadkit {

struct CenterlineLine {
  nlohmann::json id;  // string or number, kept as written
  Grade grade = Grade::Low;
  std::vector<Point2> points;
  std::optional<double> width_m;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields

  friend bool operator==(const CenterlineLine&, const CenterlineLine&) = default;
};

/// {"resolution_m", "units"?: "px"|"m", "lines": [{"id","grade","points","width_m"?}]}
struct CenterlineFile {
  double resolution_m = BinaryMask::kDefaultResolution;
  bool units_in_meters = false;
  bool units_explicit = false;
  std::vector<CenterlineLine> lines;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const CenterlineFile&, const CenterlineFile&) = default;
};

CenterlineFile parse_centerlines(const nlohmann::json& json);
/// ParseError carries the line number of JSON syntax errors.
CenterlineFile load_centerlines(const std::filesystem::path& path);
nlohmann::json centerlines_to_json(const CenterlineFile& file);
void save_centerlines(const CenterlineFile& file, const std::filesystem::path& path);

/// Line vertices in pixel coordinates.
std::vector<Point2> pixel_points(const CenterlineLine& line, const CenterlineFile& file);

struct WidthCatalog {
  std::vector<double> widths;  // sorted ascending, deduplicated, > 0

  /// Lane widths {3.25, 3.5, 3.75} times lane counts {2, 4, 6, 8}.
  static WidthCatalog standard();
  static WidthCatalog from(std::vector<double> widths);
};

/// Nearest catalog width; ties go to the smaller width.
double select_buffer_width(double observed_m, const WidthCatalog& catalog);

/// Width assumed for a line without width_m.
double default_width_m(Grade g) noexcept;

/// Pixels whose centre lies within width / (2 * resolution) of the polyline.
BinaryMask buffer_rasterize(std::span<const Point2> line, double width_m, int width, int height,
                            double resolution_m);

struct BufferOptions {
  std::optional<double> fixed_width_m;  // otherwise catalog fit of width_m or the grade default
  WidthCatalog catalog = WidthCatalog::standard();
};

double line_buffer_width(const CenterlineLine& line, const BufferOptions& options);

/// Union of all line buffers.
BinaryMask rasterize_centerlines(const CenterlineFile& file, int width, int height, const BufferOptions& options);

/// Grade raster of all line buffers; overlaps keep the highest grade.
GradeMask rasterize_grade_mask(const CenterlineFile& file, int width, int height, const BufferOptions& options);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// 871 : 108 : 100 proportions rounded for train and val; test takes the rest.
SplitCounts split_counts(std::size_t n) noexcept;

struct Manifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

Manifest make_manifest(std::vector<std::string> names, std::uint64_t seed);
/// Regular, non-hidden files of `tile_dir`; throws EmptyDirectory.
Manifest make_manifest(const std::filesystem::path& tile_dir, std::uint64_t seed);
nlohmann::json manifest_to_json(const Manifest& manifest);

}  // namespace roadkit
