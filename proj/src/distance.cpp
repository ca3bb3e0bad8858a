#include "roadkit/distance.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace roadkit {
namespace {

constexpr long long kFar = std::numeric_limits<long long>::max() / 4;

// One-dimensional squared distance over f (kFar = no site), in place.
void transform_line(std::vector<long long>& f, std::vector<int>& v, std::vector<double>& z,
                    std::vector<long long>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kFar) continue;
    const double fq = static_cast<double>(f[q]) + static_cast<double>(q) * q;
    double s = 0.0;
    while (k >= 0) {
      const int p = v[k];
      const double fp = static_cast<double>(f[p]) + static_cast<double>(p) * p;
      s = (fq - fp) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -INFINITY : s;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q] = kFar;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (j < k && z[j + 1] < q) ++j;
    const long long d = q - v[j];
    out[q] = f[v[j]] + d * d;
  }
}

}  // namespace

Grid<long long> squared_distance_to_sites(const BinaryMask& sites) {
  const int w = sites.width();
  const int h = sites.height();
  Grid<long long> dist(w, h, kFar);
  std::vector<long long> f, out;
  std::vector<int> v;
  std::vector<double> z;

  f.resize(h);
  out.resize(h);
  v.resize(h);
  z.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sites(x, y) ? 0 : kFar;
    transform_line(f, v, z, out);
    for (int y = 0; y < h; ++y) dist(x, y) = out[y];
  }

  f.resize(w);
  out.resize(w);
  v.resize(w);
  z.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = dist(x, y);
    transform_line(f, v, z, out);
    for (int x = 0; x < w; ++x) dist(x, y) = out[x];
  }
  return dist;
}

Grid<double> euclidean_distance_transform(const BinaryMask& mask) {
  // One-pixel background frame stands in for "outside the raster".
  BinaryMask background(mask.width() + 2, mask.height() + 2, mask.resolution_m());
  for (int y = 0; y < background.height(); ++y) {
    for (int x = 0; x < background.width(); ++x) {
      background.set(x, y, !mask.test(x - 1, y - 1));
    }
  }
  const Grid<long long> d2 = squared_distance_to_sites(background);
  Grid<double> edt(mask.width(), mask.height(), 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y)) edt(x, y) = std::sqrt(static_cast<double>(d2(x + 1, y + 1)));
    }
  }
  return edt;
}

}  // namespace roadkit
