#include "roadkit/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace roadkit {
namespace {

namespace fs = std::filesystem;

// Decoded 8-bit raster with one (gray) or three (RGB) interleaved channels.
struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

RawRaster decode_png(std::span<const std::uint8_t> bytes, const fs::path& origin) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, origin.string() + ": " + msg);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  RawRaster raw;
  raw.width = static_cast<int>(image.width);
  raw.height = static_cast<int>(image.height);
  raw.channels = color ? 3 : 1;
  if (raw.width < 1 || raw.height < 1) {
    png_image_free(&image);
    throw Error(ErrorCode::ZeroDimension, origin.string());
  }
  raw.data.resize(PNG_IMAGE_SIZE(image));
  png_color black{0, 0, 0};
  if (png_image_finish_read(&image, &black, raw.data.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, origin.string() + ": " + msg);
  }
  return raw;
}

std::vector<std::uint8_t> encode_png_raw(const RawRaster& raw) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raw.width);
  image.height = static_cast<png_uint_32>(raw.height);
  image.format = raw.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, raw.data.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::IoFailure, std::string("png sizing failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&image, out.data(), &size, 0, raw.data.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::IoFailure, std::string("png encoding failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

// Binary PGM (P5) / PPM (P6) with maxval <= 255.
RawRaster decode_pnm(std::span<const std::uint8_t> bytes, const fs::path& origin) {
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long value = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000'000L) break;
      any = true;
      ++pos;
    }
    if (!any) throw Error(ErrorCode::UnsupportedFormat, origin.string() + ": malformed PNM header");
    return value;
  };
  const int channels = bytes[1] == '5' ? 1 : 3;
  const long width = next_int();
  const long height = next_int();
  const long maxval = next_int();
  if (width < 1 || height < 1) throw Error(ErrorCode::ZeroDimension, origin.string());
  if (maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::UnsupportedFormat, origin.string() + ": only 8-bit PNM is supported");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (pos + needed > bytes.size()) {
    throw Error(ErrorCode::UnsupportedFormat, origin.string() + ": truncated PNM raster");
  }
  RawRaster raw{static_cast<int>(width), static_cast<int>(height), channels, {}};
  raw.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + needed));
  if (maxval != 255) {
    for (auto& v : raw.data) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return raw;
}

std::vector<std::uint8_t> encode_pnm(const RawRaster& raw) {
  const std::string header = std::string(raw.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(raw.width) + " " + std::to_string(raw.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raw.data.begin(), raw.data.end());
  return out;
}

RawRaster read_raster(const fs::path& path) {
  const auto bytes = read_file(path);
  static constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, path);
  }
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": expected PNG or binary PGM/PPM");
}

void write_raster(const RawRaster& raw, const fs::path& path) {
  const std::string ext = lower_extension(path);
  const bool pnm = ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
  if (pnm && ext == ".pgm" && raw.channels != 1) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": PGM cannot hold RGB data");
  }
  if (pnm && ext == ".ppm" && raw.channels != 3) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": PPM expects RGB data");
  }
  write_file(path, pnm ? encode_pnm(raw) : encode_png_raw(raw));
}

constexpr int luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return (299 * r + 587 * g + 114 * b) / 1000;
}

RawRaster to_raw(const RgbImage& image) {
  RawRaster raw{image.width(), image.height(), 3, {}};
  raw.data.reserve(image.size() * 3);
  for (const Rgb& c : image.values()) {
    raw.data.push_back(c.r);
    raw.data.push_back(c.g);
    raw.data.push_back(c.b);
  }
  return raw;
}

}  // namespace

Rgb Palette::color(Label label) const noexcept {
  switch (label) {
    case Label::High: return high;
    case Label::Medium: return medium;
    case Label::Low: return low;
    case Label::Background: break;
  }
  return background;
}

std::optional<Label> Palette::label(Rgb c) const noexcept {
  for (Label l : {Label::Background, Label::Low, Label::Medium, Label::High}) {
    if (color(l) == c) return l;
  }
  return std::nullopt;
}

bool Palette::is_bijective() const noexcept {
  const std::array<Rgb, 4> colors = {background, low, medium, high};
  for (std::size_t i = 0; i < colors.size(); ++i) {
    for (std::size_t j = i + 1; j < colors.size(); ++j) {
      if (colors[i] == colors[j]) return false;
    }
  }
  return true;
}

BinaryMask load_mask(const fs::path& path, double resolution_m) {
  const RawRaster raw = read_raster(path);
  BinaryMask mask(raw.width, raw.height, resolution_m);
  auto dst = mask.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    int lum = 0;
    if (raw.channels == 1) {
      lum = raw.data[i];
    } else {
      lum = luminance(raw.data[3 * i], raw.data[3 * i + 1], raw.data[3 * i + 2]);
    }
    dst[i] = lum > 127 ? 1 : 0;
  }
  return mask;
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
  RawRaster raw{mask.width(), mask.height(), 1, {}};
  raw.data.reserve(mask.size());
  for (std::uint8_t v : mask.values()) raw.data.push_back(v != 0 ? 255 : 0);
  write_raster(raw, path);
}

RgbImage load_rgb(const fs::path& path) {
  const RawRaster raw = read_raster(path);
  RgbImage image(raw.width, raw.height);
  auto dst = image.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (raw.channels == 1) {
      dst[i] = {raw.data[i], raw.data[i], raw.data[i]};
    } else {
      dst[i] = {raw.data[3 * i], raw.data[3 * i + 1], raw.data[3 * i + 2]};
    }
  }
  return image;
}

void save_rgb(const RgbImage& image, const fs::path& path) { write_raster(to_raw(image), path); }

void save_grade_mask(const GradeMask& mask, const Palette& palette, const fs::path& path) {
  if (!palette.is_bijective()) {
    throw Error(ErrorCode::InvalidConfig, "palette must map the four labels to distinct colors");
  }
  RgbImage image(mask.width(), mask.height());
  auto dst = image.values();
  const auto src = mask.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = palette.color(src[i]);
  save_rgb(image, path);
}

GradeMask load_grade_mask(const fs::path& path, const Palette& palette) {
  const RawRaster raw = read_raster(path);
  GradeMask mask(raw.width, raw.height, Label::Background);
  auto dst = mask.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (raw.channels == 1) {
      const std::uint8_t v = raw.data[i];
      if (v > 3) {
        throw Error(ErrorCode::UnknownColor,
                    path.string() + ": label value " + std::to_string(v) + " outside 0..3");
      }
      dst[i] = static_cast<Label>(v);
    } else {
      const Rgb c{raw.data[3 * i], raw.data[3 * i + 1], raw.data[3 * i + 2]};
      const auto label = palette.label(c);
      if (!label) {
        throw Error(ErrorCode::UnknownColor,
                    path.string() + ": color (" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
                        std::to_string(c.b) + ") is not in the palette");
      }
      dst[i] = *label;
    }
  }
  return mask;
}

void save_label_raster(const GradeMask& mask, const fs::path& path) {
  RawRaster raw{mask.width(), mask.height(), 1, {}};
  raw.data.reserve(mask.size());
  for (Label l : mask.values()) raw.data.push_back(static_cast<std::uint8_t>(l));
  write_raster(raw, path);
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) { return encode_png_raw(to_raw(image)); }

RgbImage mask_to_rgb(const BinaryMask& mask) {
  RgbImage image(mask.width(), mask.height());
  auto dst = image.values();
  const auto src = mask.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::uint8_t v = src[i] != 0 ? 255 : 0;
    dst[i] = {v, v, v};
  }
  return image;
}

std::vector<TileRegion> tile_regions(int width, int height, int tile_size) {
  if (tile_size < 1) throw Error(ErrorCode::ZeroTileSize, "tile_size must be >= 1");
  if (width < 1 || height < 1) throw Error(ErrorCode::ZeroDimension, "cannot tile an empty raster");
  std::vector<TileRegion> regions;
  const int rows = (height + tile_size - 1) / tile_size;
  const int cols = (width + tile_size - 1) / tile_size;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int x0 = c * tile_size;
      const int y0 = r * tile_size;
      regions.push_back({r, c, x0, y0, std::min(tile_size, width - x0), std::min(tile_size, height - y0)});
    }
  }
  return regions;
}

std::vector<BinaryMask> tile(const BinaryMask& mask, int tile_size) {
  std::vector<BinaryMask> tiles;
  for (const TileRegion& region : tile_regions(mask.width(), mask.height(), tile_size)) {
    BinaryMask t(tile_size, tile_size, mask.resolution_m());
    for (int y = 0; y < region.height; ++y) {
      for (int x = 0; x < region.width; ++x) t(x, y) = mask(region.x0 + x, region.y0 + y);
    }
    tiles.push_back(std::move(t));
  }
  return tiles;
}

BinaryMask untile(std::span<const BinaryMask> tiles, int tile_size, int width, int height) {
  const auto regions = tile_regions(width, height, tile_size);
  if (tiles.size() != regions.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tile count does not match the target dimensions");
  }
  BinaryMask out(width, height, tiles.empty() ? BinaryMask::kDefaultResolution : tiles.front().resolution_m());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const TileRegion& region = regions[i];
    if (tiles[i].width() != tile_size || tiles[i].height() != tile_size) {
      throw Error(ErrorCode::ShapeMismatch, "tile " + std::to_string(i) + " has the wrong size");
    }
    for (int y = 0; y < region.height; ++y) {
      for (int x = 0; x < region.width; ++x) out(region.x0 + x, region.y0 + y) = tiles[i](x, y);
    }
  }
  return out;
}

BinaryMask crop(const BinaryMask& mask, int x0, int y0, int width, int height) {
  BinaryMask out(width, height, mask.resolution_m());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out(x, y) = mask.value_or(x0 + x, y0 + y, 0);
  }
  return out;
}

}  // namespace roadkit
