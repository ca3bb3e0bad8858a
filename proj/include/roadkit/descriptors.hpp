#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "roadkit/geometry.hpp"
#include "roadkit/raster.hpp"
#include "roadkit/skeleton.hpp"

namespace roadkit {

/// Geometric descriptors of one skeleton segment. Lengths and widths are in
/// meters, curvature in 1/m.
struct DescriptorVector {
  int segment_id = 0;
  double length_m = 0.0;
  double width_m = 0.0;
  double straightness = 1.0;
  double curvature = 0.0;
  bool curvature_too_short = false;
  int node_degree = 1;
  double density = 0.0;
  std::optional<double> orientation_variability_deg;  // experimental, off by default
  std::optional<int> lane_count;                       // experimental, off by default
};

enum class LengthWord { Short, Medium, Long };
enum class WidthWord { Narrow, Medium, Wide };
enum class ShapeWord { Straight, Curvy };
enum class ContextWord { Sparse, Dense };

std::string_view to_string(LengthWord w) noexcept;
std::string_view to_string(WidthWord w) noexcept;
std::string_view to_string(ShapeWord w) noexcept;
std::string_view to_string(ContextWord w) noexcept;

struct DescriptorCategories {
  LengthWord length = LengthWord::Short;
  WidthWord width = WidthWord::Narrow;
  ShapeWord shape = ShapeWord::Straight;
  ContextWord context = ContextWord::Sparse;

  friend bool operator==(const DescriptorCategories&, const DescriptorCategories&) = default;
};

/// Cut points for discretize(). A value equal to a cut point falls in the
/// upper class.
struct DescriptorThresholds {
  double length_medium_m = 200.0;
  double length_long_m = 1000.0;
  double width_medium_m = 6.0;
  double width_wide_m = 15.0;
  double straight_min = 0.9;
  double dense_min = 0.02;

  void validate() const;
};

struct DescriptorOptions {
  double resolution_m = BinaryMask::kDefaultResolution;
  int density_radius_px = 64;
  double curvature_step_px = 5.0;
  bool extra_descriptors = false;
  double lane_width_m = 3.5;
};

double segment_length(const Segment& seg, double resolution_m);

/// Mean of (2*EDT - 1) * resolution over the segment pixels.
double mean_width(const Segment& seg, const BinaryMask& mask, double resolution_m);
double mean_width(const Segment& seg, const Grid<double>& edt, double resolution_m);

/// Chord over path length; 1 for a single pixel, 0 for a closed loop.
double straightness(const Segment& seg);

struct Curvature {
  double value = 0.0;
  bool too_short = false;
};

/// Points at every multiple of `step_px` of arc length along the pixel
/// polyline, starting at its first pixel.
std::vector<Point2> resample_polyline(const Segment& seg, double step_px);

/// Mean absolute turn angle over interior resampled points divided by the
/// step length in meters.
Curvature mean_curvature(const Segment& seg, double resolution_m, double step_px = 5.0);

int node_degree(const Segment& seg, const SkeletonGraph& graph);

/// Foreign skeleton pixels within `radius_px` of the segment's middle pixel
/// over the disc area, clamped to [0,1].
double local_density(const Segment& seg, const SkeletonMask& skel, int radius_px = 64);

/// Circular standard deviation of resampled tangent directions, degrees.
double orientation_variability(const Segment& seg, double step_px = 5.0);

int lane_count_proxy(double width_m, double lane_width_m = 3.5);

std::vector<DescriptorVector> describe_segments(const SkeletonGraph& graph, const BinaryMask& mask,
                                                const SkeletonMask& skel, const DescriptorOptions& options);

DescriptorCategories discretize(const DescriptorVector& v, const DescriptorThresholds& thresholds = {});

void write_descriptor_csv(std::ostream& out, std::span<const DescriptorVector> rows,
                          const DescriptorThresholds& thresholds = {});
std::vector<DescriptorVector> read_descriptor_csv(std::istream& in);
nlohmann::json descriptors_to_json(std::span<const DescriptorVector> rows,
                                   const DescriptorThresholds& thresholds = {});

}  // namespace roadkit
