#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "roadkit/raster.hpp"

namespace roadkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(Point2, Point2) = default;
};

constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Maps any angle in degrees into [0, 360).
inline double normalize_degrees(double deg) noexcept {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

/// Minimal circular distance between two directions, in [0, 180].
inline double circular_deviation(double a_deg, double b_deg) noexcept {
  const double d = normalize_degrees(a_deg - b_deg);
  return d > 180.0 ? 360.0 - d : d;
}

/// Signed difference a - b wrapped into (-180, 180].
inline double signed_deviation(double a_deg, double b_deg) noexcept {
  double d = normalize_degrees(a_deg - b_deg);
  if (d > 180.0) d -= 360.0;
  return d;
}

/// Direction of b as seen from a, atan2 convention on raw pixel axes, in [0,360).
inline double direction_degrees(Pixel from, Pixel to) noexcept {
  return normalize_degrees(rad_to_deg(std::atan2(static_cast<double>(to.y - from.y),
                                                 static_cast<double>(to.x - from.x))));
}

inline double euclidean(Pixel a, Pixel b) noexcept {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) noexcept {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

/// Distance from p to a polyline (round caps and joins). A one-point
/// polyline degenerates to point distance.
inline double point_polyline_distance(Point2 p, std::span<const Point2> line) noexcept {
  if (line.empty()) return INFINITY;
  if (line.size() == 1) return std::hypot(p.x - line[0].x, p.y - line[0].y);
  double best = INFINITY;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  }
  return best;
}

}  // namespace roadkit
