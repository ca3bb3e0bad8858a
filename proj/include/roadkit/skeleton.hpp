#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "roadkit/raster.hpp"

namespace roadkit {

/// Zhang-Suen style two-subiteration thinning. Candidates are deleted one at a
/// time and only while they remain simple points with at least two
/// neighbours, so 8-connected components and holes are preserved. A final
/// sweep removes leftover redundant pixels (corner and 2x2 residue).
SkeletonMask skeletonize(const BinaryMask& mask);

/// Removes simple, non-endpoint pixels inside [x0,x1]x[y0,y1] until none is
/// left. Used after thinning and after drawing bridges.
void remove_redundant_pixels(SkeletonMask& skel, int x0, int y0, int x1, int y1);
void remove_redundant_pixels(SkeletonMask& skel);

/// Number of 8-connected skeleton neighbours.
int neighbor_count(const BinaryMask& mask, Pixel p) noexcept;

/// Simple point test for 8-connected foreground / 4-connected background.
bool is_simple_point(const BinaryMask& mask, Pixel p) noexcept;

struct GraphNode {
  int id = 0;
  Pixel position;             // representative pixel
  int degree = 0;             // incident edge ends
  std::vector<Pixel> pixels;  // all skeleton pixels merged into this node
  bool loop_anchor = false;
};

struct Segment {
  int id = 0;
  std::vector<Pixel> polyline;  // 8-connected, starts and ends on node pixels
  int from_node = 0;
  int to_node = 0;

  bool closed() const noexcept { return polyline.size() > 1 && polyline.front() == polyline.back(); }
  /// Pixels that belong to the edge only (polyline minus its node ends).
  std::size_t interior_count() const noexcept { return polyline.size() >= 2 ? polyline.size() - 2 : 0; }
};

struct SkeletonGraph {
  int width = 0;
  int height = 0;
  std::vector<GraphNode> nodes;
  std::vector<Segment> edges;
  std::vector<std::vector<int>> adjacency;  // node id -> incident edge ids
};

/// Junction pixels have >= 3 neighbours; adjacent junction pixels merge into
/// one node placed at the member closest to their centroid. Pure loops get an
/// anchor node at their first pixel in row-major order. An isolated pixel
/// becomes a degree-1 node with a single-pixel edge.
SkeletonGraph build_graph(const SkeletonMask& skel);

std::vector<Segment> segments(const SkeletonGraph& graph);

/// Removes branches shorter than `min_length_px` pixels that join a junction
/// at one end and stop at a free endpoint at the other.
SkeletonMask prune_spurs(const SkeletonMask& skel, int min_length_px);

struct ComponentLabels {
  Grid<int> labels;  // 0 = background, components dense from 1 in raster order
  int count = 0;
};

ComponentLabels connected_components(const BinaryMask& mask);
/// Components of the pixels carrying one label.
ComponentLabels connected_components(const GradeMask& mask, Label label);

nlohmann::json graph_to_json(const SkeletonGraph& graph);
SkeletonGraph graph_from_json(const nlohmann::json& json);

}  // namespace roadkit
