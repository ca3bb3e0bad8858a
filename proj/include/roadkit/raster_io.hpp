#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "roadkit/raster.hpp"

namespace roadkit {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(Rgb, Rgb) = default;
};

using RgbImage = Grid<Rgb>;

/// Grade-label to color mapping used for grade-mask rasters.
struct Palette {
  Rgb high{255, 0, 0};
  Rgb medium{0, 0, 255};
  Rgb low{255, 255, 0};
  Rgb background{0, 0, 0};

  Rgb color(Label label) const noexcept;
  std::optional<Label> label(Rgb color) const noexcept;
  bool is_bijective() const noexcept;
};

/// Loads an 8-bit gray or RGB raster (PNG, binary PGM/PPM). A pixel is road
/// iff its luminance exceeds 127; RGB luminance uses integer Rec. 601 weights.
BinaryMask load_mask(const std::filesystem::path& path,
                     double resolution_m = BinaryMask::kDefaultResolution);

/// Writes road as 255 and background as 0. `.pgm` selects PGM, otherwise PNG.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

RgbImage load_rgb(const std::filesystem::path& path);
void save_rgb(const RgbImage& image, const std::filesystem::path& path);

void save_grade_mask(const GradeMask& mask, const Palette& palette, const std::filesystem::path& path);

/// RGB rasters decode through the palette (unknown colors are an error);
/// single-channel rasters are read as label values 0..3.
GradeMask load_grade_mask(const std::filesystem::path& path, const Palette& palette = {});

/// Single-channel label raster with values {0=Background, 1=Low, 2=Medium, 3=High}.
void save_label_raster(const GradeMask& mask, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);

RgbImage mask_to_rgb(const BinaryMask& mask);

struct TileRegion {
  int row = 0;
  int col = 0;
  int x0 = 0;
  int y0 = 0;
  int width = 0;   // valid (unpadded) extent
  int height = 0;
};

/// Row-major tile layout covering a width x height raster.
std::vector<TileRegion> tile_regions(int width, int height, int tile_size);

/// Splits into tile_size x tile_size tiles in row-major order; edge tiles are
/// zero-padded.
std::vector<BinaryMask> tile(const BinaryMask& mask, int tile_size);

/// Inverse of tile(): stitches tiles and crops the padding.
BinaryMask untile(std::span<const BinaryMask> tiles, int tile_size, int width, int height);

BinaryMask crop(const BinaryMask& mask, int x0, int y0, int width, int height);

}  // namespace roadkit
