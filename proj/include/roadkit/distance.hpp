#pragma once

#include "roadkit/raster.hpp"

namespace roadkit {

/// Exact squared Euclidean distance from every pixel to the nearest pixel
/// where `sites` is set (separable lower-envelope transform). Pixels with no
/// site anywhere get a value larger than any in-image distance.
Grid<long long> squared_distance_to_sites(const BinaryMask& sites);

/// Euclidean distance from each foreground pixel centre to the nearest
/// background pixel centre; pixels outside the raster count as background.
/// Background pixels map to 0.
Grid<double> euclidean_distance_transform(const BinaryMask& mask);

}  // namespace roadkit
