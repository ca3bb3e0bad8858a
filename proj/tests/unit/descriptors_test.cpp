#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "roadkit/descriptors.hpp"

using namespace roadkit;

namespace {

Segment horizontal(int x0, int x1, int y) {
  Segment s;
  for (int x = x0; x <= x1; ++x) s.polyline.push_back({x, y});
  return s;
}

BinaryMask strip(int width, int height, int y0, int y1) {
  BinaryMask m(width, height);
  for (int y = y0; y <= y1; ++y) {
    for (int x = 0; x < width; ++x) m.set(x, y);
  }
  return m;
}

}  // namespace

TEST(Descriptors, LengthCountsAxisAndDiagonalSteps) {
  Segment s;
  s.polyline = {{0, 0}, {1, 0}, {2, 1}, {3, 2}, {3, 3}};
  EXPECT_DOUBLE_EQ(segment_length(s, 1.0), 2.0 + 2.0 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(segment_length(horizontal(0, 10, 0), 0.8), 8.0);
}

TEST(Descriptors, BrokenPathRejected) {
  Segment s;
  s.polyline = {{0, 0}, {3, 0}};
  try {
    segment_length(s, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePath);
  }
  EXPECT_THROW(segment_length(Segment{}, 1.0), Error);
}

TEST(Descriptors, WidthOfOddStrips) {
  for (int w : {1, 3, 5, 7, 9, 11}) {
    const BinaryMask m = strip(80, 40, 10, 10 + w - 1);
    const Segment s = horizontal(5, 74, 10 + w / 2);
    EXPECT_DOUBLE_EQ(mean_width(s, m, 0.8), w * 0.8) << "strip of " << w << " px";
  }
}

TEST(Descriptors, WidthOutsideMaskRejected) {
  const BinaryMask m = strip(20, 20, 5, 7);
  try {
    mean_width(horizontal(0, 10, 15), m, 0.8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SegmentOutsideMask);
  }
}

TEST(Descriptors, Straightness) {
  EXPECT_DOUBLE_EQ(straightness(horizontal(0, 20, 0)), 1.0);
  Segment single;
  single.polyline = {{4, 4}};
  EXPECT_DOUBLE_EQ(straightness(single), 1.0);
  Segment corner;
  for (int x = 0; x <= 10; ++x) corner.polyline.push_back({x, 0});
  for (int y = 1; y <= 10; ++y) corner.polyline.push_back({10, y});
  EXPECT_NEAR(straightness(corner), std::hypot(10.0, 10.0) / 20.0, 1e-12);
}

TEST(Descriptors, ResampleAtFixedArcLength) {
  const auto pts = resample_polyline(horizontal(3, 23, 7), 5.0);
  ASSERT_EQ(pts.size(), 5u);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    EXPECT_DOUBLE_EQ(pts[k].x, 3.0 + 5.0 * static_cast<double>(k));
    EXPECT_DOUBLE_EQ(pts[k].y, 7.0);
  }
}

TEST(Descriptors, CurvatureOfStraightAndShortSegments) {
  const Curvature straight = mean_curvature(horizontal(0, 40, 0), 0.8);
  EXPECT_FALSE(straight.too_short);
  EXPECT_DOUBLE_EQ(straight.value, 0.0);
  const Curvature tiny = mean_curvature(horizontal(0, 6, 0), 0.8);
  EXPECT_TRUE(tiny.too_short);
}

TEST(Descriptors, CurvatureOfRightAngleTurn) {
  Segment corner;
  for (int x = 0; x <= 10; ++x) corner.polyline.push_back({x, 0});
  for (int y = 1; y <= 10; ++y) corner.polyline.push_back({10, y});
  // Samples at 0,5,10 along x then 5,10 along y: one 90 degree turn among 3 interior points.
  const Curvature c = mean_curvature(corner, 1.0, 5.0);
  EXPECT_NEAR(c.value, (std::numbers::pi / 2.0) / 3.0 / 5.0, 1e-12);
}

TEST(Descriptors, DensityCountsForeignSkeletonOnly) {
  SkeletonMask skel(200, 200);
  const Segment s = horizontal(50, 150, 100);
  for (Pixel p : s.polyline) skel.set(p);
  EXPECT_DOUBLE_EQ(local_density(s, skel, 64), 0.0);
  for (int y = 90; y < 100; ++y) skel.set(100, y);
  EXPECT_NEAR(local_density(s, skel, 64), 10.0 / (std::numbers::pi * 64 * 64), 1e-15);
}

TEST(Descriptors, NodeDegreeFromGraph) {
  SkeletonMask s(21, 21);
  for (int i = 0; i < 21; ++i) s.set(i, 10);
  for (int i = 0; i < 10; ++i) s.set(10, i);
  const SkeletonGraph g = build_graph(s);
  for (const Segment& e : g.edges) EXPECT_EQ(node_degree(e, g), 3);
}

TEST(Descriptors, DiscretizeBoundariesGoUp) {
  DescriptorVector v;
  v.length_m = 200.0;
  v.width_m = 15.0;
  v.straightness = 0.9;
  v.density = 0.02;
  const DescriptorCategories c = discretize(v);
  EXPECT_EQ(c.length, LengthWord::Medium);
  EXPECT_EQ(c.width, WidthWord::Wide);
  EXPECT_EQ(c.shape, ShapeWord::Straight);
  EXPECT_EQ(c.context, ContextWord::Dense);
  v.length_m = 1000.0;
  v.width_m = 5.999;
  v.straightness = 0.8999;
  v.density = 0.0199;
  const DescriptorCategories d = discretize(v);
  EXPECT_EQ(d.length, LengthWord::Long);
  EXPECT_EQ(d.width, WidthWord::Narrow);
  EXPECT_EQ(d.shape, ShapeWord::Curvy);
  EXPECT_EQ(d.context, ContextWord::Sparse);
}

TEST(Descriptors, ThresholdsValidated) {
  DescriptorThresholds t;
  t.length_long_m = 100.0;
  try {
    t.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidThresholds);
  }
}

TEST(Descriptors, ExtrasOnlyWhenRequested) {
  const BinaryMask m = strip(80, 30, 10, 18);
  SkeletonMask skel(80, 30);
  for (int x = 5; x < 75; ++x) skel.set(x, 14);
  const SkeletonGraph g = build_graph(skel);
  DescriptorOptions o;
  auto rows = describe_segments(g, m, skel, o);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].lane_count.has_value());
  o.extra_descriptors = true;
  rows = describe_segments(g, m, skel, o);
  ASSERT_TRUE(rows[0].lane_count.has_value());
  EXPECT_EQ(*rows[0].lane_count, 2);  // 7.2 m over 3.5 m lanes
  EXPECT_NEAR(*rows[0].orientation_variability_deg, 0.0, 1e-3);
}

TEST(Descriptors, LaneCountAtLeastOne) {
  EXPECT_EQ(lane_count_proxy(0.5), 1);
  EXPECT_EQ(lane_count_proxy(14.0), 4);
}

TEST(Descriptors, CsvRoundTripIsExact) {
  std::vector<DescriptorVector> rows(2);
  rows[0].segment_id = 0;
  rows[0].length_m = 123.456789012345;
  rows[0].width_m = 7.2;
  rows[0].straightness = 0.1 + 0.2;
  rows[0].curvature = 1.0 / 3.0;
  rows[0].node_degree = 3;
  rows[0].density = 1e-7;
  rows[1].segment_id = 1;
  rows[1].curvature_too_short = true;
  rows[1].orientation_variability_deg = 12.5;
  rows[1].lane_count = 2;
  std::stringstream ss;
  write_descriptor_csv(ss, rows);
  const std::string header = ss.str().substr(0, ss.str().find('\n'));
  EXPECT_EQ(header,
            "segment_id,length_m,width_m,straightness,curvature,curvature_too_short,node_degree,density,"
            "orientation_variability_deg,lane_count,length_word,width_word,shape_word,context_word");
  const auto back = read_descriptor_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].length_m, rows[0].length_m);
  EXPECT_EQ(back[0].straightness, rows[0].straightness);
  EXPECT_EQ(back[0].curvature, rows[0].curvature);
  EXPECT_EQ(back[0].density, rows[0].density);
  EXPECT_EQ(back[0].node_degree, 3);
  EXPECT_TRUE(back[1].curvature_too_short);
  EXPECT_EQ(back[1].lane_count, 2);
  EXPECT_EQ(back[1].orientation_variability_deg, 12.5);
}

TEST(Descriptors, CsvMissingColumnRejected) {
  std::stringstream ss("segment_id,length_m\n0,1\n");
  try {
    read_descriptor_csv(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}
