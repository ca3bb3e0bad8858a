#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "roadkit/error.hpp"

namespace roadkit {

/// Pixel coordinate: x is the column, y is the row (image convention, y down).
struct Pixel {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(Pixel, Pixel) = default;
};

/// Row-major scan order, used everywhere a deterministic pixel order is needed.
constexpr bool raster_less(Pixel a, Pixel b) noexcept {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

constexpr long long squared_distance(Pixel a, Pixel b) noexcept {
  const long long dx = a.x - b.x;
  const long long dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Clockwise from north: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::array<Pixel, 8> kNeighbors8 = {{
    {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1},
}};

template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::ZeroDimension, "raster dimensions must be at least 1x1");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool contains(Pixel p) const noexcept { return contains(p.x, p.y); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](Pixel p) noexcept { return (*this)(p.x, p.y); }
  const T& operator[](Pixel p) const noexcept { return (*this)(p.x, p.y); }

  T value_or(int x, int y, T fallback) const noexcept {
    return contains(x, y) ? (*this)(x, y) : fallback;
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Road membership raster. Values are 0 or 1.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  static constexpr double kDefaultResolution = 0.8;

  BinaryMask() = default;
  BinaryMask(int width, int height, double resolution_m = kDefaultResolution);

  /// Out-of-bounds reads are background.
  bool test(int x, int y) const noexcept { return value_or(x, y, 0) != 0; }
  bool test(Pixel p) const noexcept { return test(p.x, p.y); }
  void set(int x, int y, bool on = true) noexcept { (*this)(x, y) = on ? 1 : 0; }
  void set(Pixel p, bool on = true) noexcept { set(p.x, p.y, on); }

  std::size_t count() const noexcept;
  std::vector<Pixel> pixels() const;

  double resolution_m() const noexcept { return resolution_m_; }
  void set_resolution_m(double resolution_m);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  double resolution_m_ = kDefaultResolution;
};

/// A thinned mask. Same storage as BinaryMask; the alias documents intent.
using SkeletonMask = BinaryMask;

enum class Grade : std::uint8_t { High, Medium, Low };

/// Fixed tie-break order High > Medium > Low.
inline constexpr std::array<Grade, 3> kGrades = {Grade::High, Grade::Medium, Grade::Low};

/// Per-pixel grade label; numeric values are the single-channel raster encoding.
enum class Label : std::uint8_t { Background = 0, Low = 1, Medium = 2, High = 3 };

using GradeMask = Grid<Label>;

constexpr Label to_label(Grade g) noexcept {
  switch (g) {
    case Grade::High: return Label::High;
    case Grade::Medium: return Label::Medium;
    case Grade::Low: return Label::Low;
  }
  return Label::Background;
}

constexpr std::optional<Grade> to_grade(Label l) noexcept {
  switch (l) {
    case Label::High: return Grade::High;
    case Label::Medium: return Grade::Medium;
    case Label::Low: return Grade::Low;
    case Label::Background: break;
  }
  return std::nullopt;
}

constexpr std::size_t grade_index(Grade g) noexcept { return static_cast<std::size_t>(g); }

/// Lowercase grade word: "high", "medium", "low".
std::string_view grade_name(Grade g) noexcept;
std::optional<Grade> grade_from_name(std::string_view name) noexcept;

/// Road pixels (any non-Background label) as a binary mask.
BinaryMask road_pixels(const GradeMask& grades, double resolution_m = BinaryMask::kDefaultResolution);

}  // namespace roadkit
