#include "roadkit/arr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "roadkit/distance.hpp"
#include "roadkit/geometry.hpp"
#include "roadkit/skeleton.hpp"

namespace roadkit {

void ArrConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (backtrack_lengths[0] < 1) fail("backtrack lengths must be positive");
  for (std::size_t i = 1; i < backtrack_lengths.size(); ++i) {
    if (backtrack_lengths[i] <= backtrack_lengths[i - 1]) fail("backtrack lengths must be strictly increasing");
  }
  if (!(max_angle_dev_deg > 0.0 && max_angle_dev_deg < 90.0)) fail("max_angle_dev must lie in (0, 90) degrees");
  if (!(angle_weight > 0.0) || !std::isfinite(angle_weight)) fail("arr angle_weight must be positive");
  if (!(distance_weight > 0.0) || !std::isfinite(distance_weight)) fail("arr distance_weight must be positive");
  if (!(max_search_radius > 0.0)) fail("max_search_radius must be positive");
  if (passes < 1) fail("arr passes must be >= 1");
}

std::vector<Pixel> detect_endpoints(const SkeletonMask& skel) {
  std::vector<Pixel> out;
  for (int y = 0; y < skel.height(); ++y) {
    for (int x = 0; x < skel.width(); ++x) {
      if (skel(x, y) && neighbor_count(skel, {x, y}) == 1) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Pixel> walk_skeleton(const SkeletonMask& skel, Pixel start, int max_steps) {
  std::vector<Pixel> path{start};
  Pixel prev{-1, -1};
  Pixel cur = start;
  for (int step = 0; step < max_steps; ++step) {
    if (step > 0 && neighbor_count(skel, cur) >= 3) break;
    Pixel next{-1, -1};
    int options = 0;
    for (Pixel d : kNeighbors8) {
      const Pixel q{cur.x + d.x, cur.y + d.y};
      if (!skel.test(q) || q == prev) continue;
      if (std::find(path.begin(), path.end(), q) != path.end()) continue;
      next = q;
      ++options;
    }
    if (options != 1) break;
    path.push_back(next);
    prev = cur;
    cur = next;
  }
  return path;
}

std::vector<BacktrackPoint> backtrack_points(const SkeletonMask& skel, Pixel endpoint, const ArrConfig& cfg) {
  const std::vector<Pixel> path = walk_skeleton(skel, endpoint, cfg.backtrack_lengths.back());
  const int steps = static_cast<int>(path.size()) - 1;
  if (steps < 1) {
    throw Error(ErrorCode::DegeneratePath,
                "no skeleton path from (" + std::to_string(endpoint.x) + "," + std::to_string(endpoint.y) + ")");
  }
  std::vector<BacktrackPoint> points;
  for (int len : cfg.backtrack_lengths) {
    if (len <= steps) points.push_back({path[static_cast<std::size_t>(len)], len});
  }
  if (points.empty()) points.push_back({path.back(), steps});
  return points;
}

double weighted_orientation(Pixel endpoint, std::span<const BacktrackPoint> points) {
  if (points.empty()) throw Error(ErrorCode::DegeneratePath, "no backtrack points");
  double total_length = 0.0;
  for (const BacktrackPoint& bp : points) total_length += bp.length;
  const double reference = direction_degrees(endpoint, points.front().position);
  double orientation = 0.0;
  for (const BacktrackPoint& bp : points) {
    const double unwrapped = reference + signed_deviation(direction_degrees(endpoint, bp.position), reference);
    orientation += unwrapped * (bp.length / total_length);
  }
  return normalize_degrees(orientation);
}

double backtrack_orientation(const SkeletonMask& skel, Pixel endpoint, const ArrConfig& cfg) {
  const auto points = backtrack_points(skel, endpoint, cfg);
  return weighted_orientation(endpoint, points);
}

std::vector<Endpoint> collect_endpoints(const SkeletonMask& skel, const ArrConfig& cfg) {
  const SkeletonGraph graph = build_graph(skel);
  Grid<int> segment_of(skel.width(), skel.height(), -1);
  for (const GraphNode& node : graph.nodes) {
    if (node.pixels.size() == 1 && !graph.adjacency[node.id].empty()) {
      segment_of[node.pixels.front()] = graph.adjacency[node.id].front();
    }
  }
  std::vector<Endpoint> out;
  for (Pixel p : detect_endpoints(skel)) {
    Endpoint e;
    e.position = p;
    e.backtrack_points = backtrack_points(skel, p, cfg);
    e.orientation_deg = weighted_orientation(p, e.backtrack_points);
    e.segment_id = segment_of[p];
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<MatchCandidate> filter_candidates(const Endpoint& e, std::span<const Endpoint> others,
                                              const ArrConfig& cfg) {
  std::vector<MatchCandidate> out;
  if (!e.has_orientation()) return out;
  const double outward = normalize_degrees(e.orientation_deg + 180.0);
  for (std::size_t i = 0; i < others.size(); ++i) {
    const Endpoint& o = others[i];
    if (o.position == e.position || !o.has_orientation()) continue;
    if (e.segment_id >= 0 && o.segment_id == e.segment_id) continue;
    const double d = euclidean(e.position, o.position);
    if (d > cfg.max_search_radius) continue;
    MatchCandidate c;
    c.source = e.position;
    c.target = o.position;
    c.candidate_index = static_cast<int>(i);
    c.candidate_orientation = o.orientation_deg;
    c.link_direction = direction_degrees(e.position, o.position);
    c.distance = d;
    c.orientation_deviation = circular_deviation(c.candidate_orientation, outward);
    c.direction_deviation = circular_deviation(c.link_direction, outward);
    if (c.orientation_deviation >= cfg.max_angle_dev_deg || c.direction_deviation >= cfg.max_angle_dev_deg) continue;
    c.degree = matching_degree(c, cfg);
    out.push_back(c);
  }
  return out;
}

double matching_degree(const MatchCandidate& c, const ArrConfig& cfg) {
  return deg_to_rad(c.orientation_deviation) * c.distance * cfg.angle_weight + c.distance * cfg.distance_weight;
}

std::vector<std::pair<int, int>> select_pairs(std::span<const Endpoint> endpoints, const ArrConfig& cfg) {
  const int n = static_cast<int>(endpoints.size());
  std::vector<std::vector<MatchCandidate>> candidates(endpoints.size());
  for (int i = 0; i < n; ++i) candidates[i] = filter_candidates(endpoints[i], endpoints, cfg);

  std::vector<bool> matched(endpoints.size(), false);
  std::vector<std::pair<int, int>> pairs;
  while (true) {
    std::vector<int> best(endpoints.size(), -1);
    for (int i = 0; i < n; ++i) {
      if (matched[i]) continue;
      double best_degree = std::numeric_limits<double>::infinity();
      for (const MatchCandidate& c : candidates[i]) {
        if (matched[c.candidate_index]) continue;
        if (c.degree < best_degree) {
          best_degree = c.degree;
          best[i] = c.candidate_index;
        }
      }
    }
    bool formed = false;
    for (int i = 0; i < n; ++i) {
      const int j = best[i];
      if (j > i && best[j] == i) {
        pairs.emplace_back(i, j);
        matched[i] = matched[j] = true;
        formed = true;
      }
    }
    if (!formed) break;
  }
  return pairs;
}

std::vector<Pixel> rasterize_line(Pixel a, Pixel b) {
  std::vector<Pixel> out;
  int x = a.x, y = a.y;
  const int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
  const int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  while (true) {
    out.push_back({x, y});
    if (x == b.x && y == b.y) break;
    const int e2 = 2 * err;
    // Diagonal steps take both branches, so the result stays 8-connected
    // without redundant 4-neighbours.
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
  return out;
}

Reconstruction reconstruct_detailed(const SkeletonMask& skel, const ArrConfig& cfg) {
  cfg.validate();
  Reconstruction result{skel, {}};
  for (int pass = 0; pass < cfg.passes; ++pass) {
    const std::vector<Endpoint> endpoints = collect_endpoints(result.skeleton, cfg);
    const auto pairs = select_pairs(endpoints, cfg);
    if (pairs.empty()) break;
    for (const auto& [i, j] : pairs) {
      const Endpoint& a = endpoints[i];
      const Endpoint& b = endpoints[j];
      MatchCandidate c;
      for (const MatchCandidate& cand : filter_candidates(a, endpoints, cfg)) {
        if (cand.candidate_index == j) c = cand;
      }
      for (Pixel p : rasterize_line(a.position, b.position)) result.skeleton.set(p, true);
      result.bridges.push_back({a.position, b.position, c.degree});
    }
    for (const auto& [i, j] : pairs) {
      const Pixel a = endpoints[i].position;
      const Pixel b = endpoints[j].position;
      remove_redundant_pixels(result.skeleton, std::min(a.x, b.x) - 2, std::min(a.y, b.y) - 2,
                              std::max(a.x, b.x) + 2, std::max(a.y, b.y) + 2);
    }
  }
  return result;
}

SkeletonMask reconstruct(const SkeletonMask& skel, const ArrConfig& cfg) {
  return reconstruct_detailed(skel, cfg).skeleton;
}

BinaryMask fill_bridges(const BinaryMask& mask, std::span<const Bridge> bridges) {
  BinaryMask out = mask;
  if (bridges.empty()) return out;
  const Grid<double> edt = euclidean_distance_transform(mask);
  for (const Bridge& br : bridges) {
    const double ea = edt.value_or(br.a.x, br.a.y, 0.0);
    const double eb = edt.value_or(br.b.x, br.b.y, 0.0);
    const double radius = std::max(0.5, 0.5 * (ea + eb) - 0.5);
    const Point2 a{static_cast<double>(br.a.x), static_cast<double>(br.a.y)};
    const Point2 b{static_cast<double>(br.b.x), static_cast<double>(br.b.y)};
    const int r = static_cast<int>(std::ceil(radius));
    for (int y = std::min(br.a.y, br.b.y) - r; y <= std::max(br.a.y, br.b.y) + r; ++y) {
      for (int x = std::min(br.a.x, br.b.x) - r; x <= std::max(br.a.x, br.b.x) + r; ++x) {
        if (!out.contains(x, y)) continue;
        if (point_segment_distance({static_cast<double>(x), static_cast<double>(y)}, a, b) <= radius) {
          out.set(x, y, true);
        }
      }
    }
  }
  return out;
}

}  // namespace roadkit
