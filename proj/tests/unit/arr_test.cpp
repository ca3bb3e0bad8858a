#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "roadkit/arr.hpp"
#include "roadkit/geometry.hpp"

using namespace roadkit;

namespace {

SkeletonMask broken_line() {
  SkeletonMask s(100, 40);
  for (int x = 5; x <= 40; ++x) s.set(x, 20);
  for (int x = 52; x <= 90; ++x) s.set(x, 20);
  return s;
}

}  // namespace

TEST(Arr, DefaultsValidate) { EXPECT_NO_THROW(ArrConfig{}.validate()); }

TEST(Arr, InvalidConfigNamesField) {
  ArrConfig cfg;
  cfg.backtrack_lengths = {10, 5, 20};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ArrConfig{};
  cfg.max_angle_dev_deg = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ArrConfig{};
  cfg.angle_weight = -0.1;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(Arr, EndpointsInRasterOrder) {
  const auto eps = detect_endpoints(broken_line());
  ASSERT_EQ(eps.size(), 4u);
  EXPECT_EQ(eps[0], (Pixel{5, 20}));
  EXPECT_EQ(eps[1], (Pixel{40, 20}));
  EXPECT_EQ(eps[2], (Pixel{52, 20}));
  EXPECT_EQ(eps[3], (Pixel{90, 20}));
}

TEST(Arr, OrientationPointsIntoTheRoad) {
  const SkeletonMask s = broken_line();
  const ArrConfig cfg;
  EXPECT_DOUBLE_EQ(backtrack_orientation(s, {5, 20}, cfg), 0.0);
  EXPECT_DOUBLE_EQ(backtrack_orientation(s, {40, 20}, cfg), 180.0);
  const auto pts = backtrack_points(s, {40, 20}, cfg);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].position, (Pixel{30, 20}));
  EXPECT_EQ(pts[2].position, (Pixel{20, 20}));
}

TEST(Arr, ShortBranchUsesFarthestPixel) {
  SkeletonMask s(30, 30);
  for (int x = 3; x <= 9; ++x) s.set(x, 5);
  const auto pts = backtrack_points(s, {3, 5}, ArrConfig{});
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].position, (Pixel{9, 5}));
  EXPECT_EQ(pts[0].length, 6);
}

TEST(Arr, WeightedOrientationUnwrapsAroundZero) {
  // Directions 350 and 10 degrees with equal weight average to 0, not 180.
  const Pixel endpoint{0, 0};
  const double a = deg_to_rad(350.0), b = deg_to_rad(10.0);
  std::vector<BacktrackPoint> pts{{{static_cast<int>(std::lround(100 * std::cos(a))), static_cast<int>(std::lround(100 * std::sin(a)))}, 10},
                                  {{static_cast<int>(std::lround(100 * std::cos(b))), static_cast<int>(std::lround(100 * std::sin(b)))}, 10}};
  const double orientation = weighted_orientation(endpoint, pts);
  EXPECT_LT(circular_deviation(orientation, 0.0), 0.5);
}

TEST(Arr, MatchingDegreeByHand) {
  MatchCandidate m;
  m.orientation_deviation = 20.0;
  m.distance = 12.0;
  const double want = (20.0 * std::numbers::pi / 180.0) * 12.0 * 0.2 + 12.0 * 0.8;
  EXPECT_NEAR(matching_degree(m, ArrConfig{}), want, 1e-12);
}

TEST(Arr, SameSegmentIsNotACandidate) {
  SkeletonMask s(60, 60);
  for (int x = 10; x <= 40; ++x) s.set(x, 30);
  const auto eps = collect_endpoints(s, ArrConfig{});
  ASSERT_EQ(eps.size(), 2u);
  EXPECT_TRUE(filter_candidates(eps[0], eps, ArrConfig{}).empty());
}

TEST(Arr, OutsideRadiusIsNotACandidate) {
  SkeletonMask s(300, 20);
  for (int x = 5; x <= 40; ++x) s.set(x, 10);
  for (int x = 150; x <= 190; ++x) s.set(x, 10);
  ArrConfig cfg;
  EXPECT_TRUE(reconstruct_detailed(s, cfg).bridges.empty());
  cfg.max_search_radius = 120.0;
  EXPECT_EQ(reconstruct_detailed(s, cfg).bridges.size(), 1u);
}

TEST(Arr, BridgesCollinearGap) {
  const Reconstruction r = reconstruct_detailed(broken_line(), ArrConfig{});
  ASSERT_EQ(r.bridges.size(), 1u);
  EXPECT_EQ(r.bridges[0].a, (Pixel{40, 20}));
  EXPECT_EQ(r.bridges[0].b, (Pixel{52, 20}));
  EXPECT_NEAR(r.bridges[0].degree, 12.0 * 0.8, 1e-9);
  for (int x = 5; x <= 90; ++x) EXPECT_TRUE(r.skeleton.test(x, 20));
  EXPECT_EQ(oracle::component_count(r.skeleton), 1);
}

TEST(Arr, MutualBestPrefersCloserPartner) {
  // Left piece ends at x=40; two candidates continue it, at gaps 8 and 14.
  SkeletonMask s(120, 60);
  for (int x = 5; x <= 40; ++x) s.set(x, 30);
  for (int x = 48; x <= 80; ++x) s.set(x, 30);
  for (int x = 54; x <= 90; ++x) s.set(x, 40);
  const auto pairs = reconstruct_detailed(s, ArrConfig{}).bridges;
  ASSERT_FALSE(pairs.empty());
  EXPECT_EQ(pairs[0].a, (Pixel{40, 30}));
  EXPECT_EQ(pairs[0].b, (Pixel{48, 30}));
}

TEST(Arr, RasterizedLineIsEightConnected) {
  const auto line = rasterize_line({0, 0}, {13, 5});
  EXPECT_EQ(line.front(), (Pixel{0, 0}));
  EXPECT_EQ(line.back(), (Pixel{13, 5}));
  EXPECT_EQ(line.size(), 14u);
  for (std::size_t k = 1; k < line.size(); ++k) EXPECT_LE(squared_distance(line[k - 1], line[k]), 2);
}

TEST(Arr, RandomFixturesMatchOracle) {
  std::mt19937_64 rng(77);
  const ArrConfig cfg;
  for (int f = 0; f < 60; ++f) {
    const auto fx = oracle::random_line_fixture(rng, f % 3 != 0);
    const auto bridges = reconstruct_detailed(fx.skeleton(), cfg).bridges;
    std::vector<std::pair<Pixel, Pixel>> got;
    for (const Bridge& b : bridges) {
      got.emplace_back(raster_less(b.a, b.b) ? b.a : b.b, raster_less(b.a, b.b) ? b.b : b.a);
    }
    std::sort(got.begin(), got.end(), [](const auto& a, const auto& b) {
      return raster_less(a.first, b.first) || (a.first == b.first && raster_less(a.second, b.second));
    });
    EXPECT_EQ(got, oracle::brute_pairs(fx, cfg)) << "fixture " << f;
  }
}

TEST(Arr, FillBridgesCoversTheGap) {
  BinaryMask road(100, 40);
  for (int y = 17; y <= 23; ++y) {
    for (int x = 0; x <= 43; ++x) road.set(x, y);
    for (int x = 49; x < 100; ++x) road.set(x, y);
  }
  const std::vector<Bridge> bridges{{{40, 20}, {52, 20}, 0.0}};
  const BinaryMask filled = fill_bridges(road, bridges);
  for (int x = 40; x <= 52; ++x) EXPECT_TRUE(filled.test(x, 20));
  EXPECT_FALSE(filled.test(46, 30));
  EXPECT_TRUE(fill_bridges(road, {}) == road);
}
