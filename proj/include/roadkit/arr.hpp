#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "roadkit/raster.hpp"

namespace roadkit {

/// Parameters of automatic road reconstruction (endpoint gap bridging).
struct ArrConfig {
  std::array<int, 3> backtrack_lengths{10, 15, 20};
  double max_angle_dev_deg = 30.0;
  double angle_weight = 0.2;     // arc-length (angular) term
  double distance_weight = 0.8;  // distance term
  double max_search_radius = 100.0;
  int passes = 1;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct BacktrackPoint {
  Pixel position;
  int length = 0;  // pixels walked from the endpoint
};

struct Endpoint {
  Pixel position;
  double orientation_deg = 0.0;  // degrees in [0,360), pointing into the road
  std::vector<BacktrackPoint> backtrack_points;
  int segment_id = -1;

  bool has_orientation() const noexcept { return !backtrack_points.empty(); }
};

struct MatchCandidate {
  Pixel source;
  Pixel target;
  int candidate_index = -1;  // index into the list passed to filter_candidates
  double candidate_orientation = 0.0;  // degrees
  double link_direction = 0.0;         // direction source -> candidate, degrees
  double distance = 0.0;               // pixels
  double orientation_deviation = 0.0;  // circular |candidate_orientation - outward|, degrees
  double direction_deviation = 0.0;    // circular |link_direction - outward|, degrees
  double degree = 0.0;                 // matching degree
};

struct Bridge {
  Pixel a;
  Pixel b;
  double degree = 0.0;
};

struct Reconstruction {
  SkeletonMask skeleton;
  std::vector<Bridge> bridges;
};

/// Skeleton pixels with exactly one 8-connected neighbour, raster order.
std::vector<Pixel> detect_endpoints(const SkeletonMask& skel);

/// Pixels reached by walking away from `start` along the skeleton, starting
/// with `start` itself. Stops after `max_steps` steps, at a junction pixel
/// (included), or where the walk would branch.
std::vector<Pixel> walk_skeleton(const SkeletonMask& skel, Pixel start, int max_steps);

/// Backtrack points actually used for `endpoint`: the configured lengths that fit
/// on the walkable path, or the farthest reachable pixel when even the
/// shortest one does not. Throws DegeneratePath when nothing is reachable.
std::vector<BacktrackPoint> backtrack_points(const SkeletonMask& skel, Pixel endpoint, const ArrConfig& cfg);

/// Length-weighted mean of the endpoint->backtrack-point directions, unwrapped
/// around the first direction, normalized to [0,360).
double weighted_orientation(Pixel endpoint, std::span<const BacktrackPoint> points);

double backtrack_orientation(const SkeletonMask& skel, Pixel endpoint, const ArrConfig& cfg);

/// Every orientable endpoint with its orientation and the id of the graph
/// edge it terminates.
std::vector<Endpoint> collect_endpoints(const SkeletonMask& skel, const ArrConfig& cfg);

/// Candidates within the search radius whose own orientation and connecting
/// direction both deviate by strictly less than max_angle_dev from the
/// outward continuation of `e`. Same-segment endpoints are skipped.
std::vector<MatchCandidate> filter_candidates(const Endpoint& e, std::span<const Endpoint> others,
                                              const ArrConfig& cfg);

/// orientation_deviation[rad] * distance * angle_weight + distance * distance_weight.
double matching_degree(const MatchCandidate& c, const ArrConfig& cfg);

/// Mutual-best pairing repeated over still-unmatched endpoints until no new
/// pair forms. Returned pairs are index pairs (i < j) in formation order.
std::vector<std::pair<int, int>> select_pairs(std::span<const Endpoint> endpoints, const ArrConfig& cfg);

/// 8-connected integer line from a to b, both ends included.
std::vector<Pixel> rasterize_line(Pixel a, Pixel b);

Reconstruction reconstruct_detailed(const SkeletonMask& skel, const ArrConfig& cfg);
SkeletonMask reconstruct(const SkeletonMask& skel, const ArrConfig& cfg);

/// Adds the road surface under each bridge to `mask`, using the mean road
/// half-width at the two bridged endpoints.
BinaryMask fill_bridges(const BinaryMask& mask, std::span<const Bridge> bridges);

}  // namespace roadkit
