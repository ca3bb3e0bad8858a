#include "roadkit/skeleton.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <deque>
#include <limits>
#include <set>
#include <utility>

namespace roadkit {
namespace {

// Bit k set iff neighbour kNeighbors8[k] is foreground.
std::uint8_t neighborhood_code(const BinaryMask& mask, Pixel p) noexcept {
  std::uint8_t code = 0;
  for (int k = 0; k < 8; ++k) {
    if (mask.test(p.x + kNeighbors8[k].x, p.y + kNeighbors8[k].y)) code |= static_cast<std::uint8_t>(1u << k);
  }
  return code;
}

// Components among the ring positions selected by `members`, with ring
// positions adjacent when their Chebyshev (eight) or Manhattan (four)
// distance is one.
int ring_components(std::uint8_t members, bool eight, std::uint8_t must_touch) {
  std::array<int, 8> comp{};
  comp.fill(-1);
  int count = 0;
  for (int start = 0; start < 8; ++start) {
    if (!(members & (1u << start)) || comp[start] >= 0) continue;
    bool touches = false;
    std::array<int, 8> stack{};
    int top = 0;
    stack[top++] = start;
    comp[start] = count;
    while (top > 0) {
      const int k = stack[--top];
      if (must_touch & (1u << k)) touches = true;
      for (int j = 0; j < 8; ++j) {
        if (!(members & (1u << j)) || comp[j] >= 0) continue;
        const int dx = std::abs(kNeighbors8[k].x - kNeighbors8[j].x);
        const int dy = std::abs(kNeighbors8[k].y - kNeighbors8[j].y);
        const bool adjacent = eight ? std::max(dx, dy) == 1 : dx + dy == 1;
        if (adjacent) {
          comp[j] = count;
          stack[top++] = j;
        }
      }
    }
    if (touches) ++count;
  }
  return count;
}

std::array<bool, 256> build_simple_table() {
  std::array<bool, 256> table{};
  constexpr std::uint8_t kOrthogonal = 0b01010101;  // N, E, S, W
  for (int code = 0; code < 256; ++code) {
    const auto fg = static_cast<std::uint8_t>(code);
    const auto bg = static_cast<std::uint8_t>(~code);
    const int t8 = ring_components(fg, true, 0xFF);
    const int t4 = ring_components(bg, false, kOrthogonal);
    table[code] = t8 == 1 && t4 == 1;
  }
  return table;
}

const std::array<bool, 256>& simple_table() {
  static const std::array<bool, 256> table = build_simple_table();
  return table;
}

constexpr bool bit(std::uint8_t code, int k) noexcept { return (code >> k) & 1u; }

// 0 -> 1 transitions around the ring P2..P9,P2.
int transitions(std::uint8_t code) noexcept {
  int a = 0;
  for (int k = 0; k < 8; ++k) {
    if (!bit(code, k) && bit(code, (k + 1) % 8)) ++a;
  }
  return a;
}

bool zhang_suen_candidate(std::uint8_t code, int subiteration) noexcept {
  const int b = std::popcount(code);
  if (b < 2 || b > 6 || transitions(code) != 1) return false;
  const bool n = bit(code, 0), e = bit(code, 2), s = bit(code, 4), w = bit(code, 6);
  if (subiteration == 0) return !(n && e && s) && !(e && s && w);
  return !(n && e && w) && !(n && s && w);
}

bool deletable(const BinaryMask& mask, Pixel p) noexcept {
  const std::uint8_t code = neighborhood_code(mask, p);
  return std::popcount(code) >= 2 && simple_table()[code];
}

}  // namespace

int neighbor_count(const BinaryMask& mask, Pixel p) noexcept {
  return std::popcount(neighborhood_code(mask, p));
}

bool is_simple_point(const BinaryMask& mask, Pixel p) noexcept {
  return simple_table()[neighborhood_code(mask, p)];
}

void remove_redundant_pixels(SkeletonMask& skel, int x0, int y0, int x1, int y1) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, skel.width() - 1);
  y1 = std::min(y1, skel.height() - 1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (skel(x, y) && deletable(skel, {x, y})) {
          skel.set(x, y, false);
          changed = true;
        }
      }
    }
  }
}

void remove_redundant_pixels(SkeletonMask& skel) {
  remove_redundant_pixels(skel, 0, 0, skel.width() - 1, skel.height() - 1);
}

SkeletonMask skeletonize(const BinaryMask& mask) {
  SkeletonMask skel = mask;
  std::vector<Pixel> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub) {
      candidates.clear();
      for (int y = 0; y < skel.height(); ++y) {
        for (int x = 0; x < skel.width(); ++x) {
          if (skel(x, y) && zhang_suen_candidate(neighborhood_code(skel, {x, y}), sub)) {
            candidates.push_back({x, y});
          }
        }
      }
      for (Pixel p : candidates) {
        if (deletable(skel, p)) {
          skel.set(p, false);
          changed = true;
        }
      }
    }
  }
  remove_redundant_pixels(skel);
  return skel;
}

SkeletonGraph build_graph(const SkeletonMask& skel) {
  const int w = skel.width();
  const int h = skel.height();
  SkeletonGraph graph;
  graph.width = w;
  graph.height = h;

  Grid<int> node_of(w, h, -1);
  Grid<std::uint8_t> visited(w, h, 0);
  Grid<std::uint8_t> seen(w, h, 0);
  Grid<std::uint8_t> degree2(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (skel(x, y)) degree2(x, y) = static_cast<std::uint8_t>(neighbor_count(skel, {x, y}));
    }
  }

  auto add_node = [&](std::vector<Pixel> pixels, Pixel position, bool anchor) {
    GraphNode node;
    node.id = static_cast<int>(graph.nodes.size());
    node.position = position;
    node.pixels = std::move(pixels);
    node.loop_anchor = anchor;
    for (Pixel p : node.pixels) node_of[p] = node.id;
    graph.nodes.push_back(std::move(node));
    return graph.nodes.back().id;
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!skel(x, y) || node_of(x, y) >= 0) continue;
      const int n = degree2(x, y);
      if (n <= 1) {
        add_node({{x, y}}, {x, y}, false);
      } else if (n >= 3) {
        std::vector<Pixel> cluster;
        std::deque<Pixel> queue{{x, y}};
        seen(x, y) = 1;
        while (!queue.empty()) {
          const Pixel p = queue.front();
          queue.pop_front();
          cluster.push_back(p);
          for (Pixel d : kNeighbors8) {
            const Pixel q{p.x + d.x, p.y + d.y};
            if (skel.test(q) && degree2[q] >= 3 && !seen[q]) {
              seen[q] = 1;
              queue.push_back(q);
            }
          }
        }
        std::sort(cluster.begin(), cluster.end(), raster_less);
        long long sx = 0, sy = 0;
        for (Pixel p : cluster) {
          sx += p.x;
          sy += p.y;
        }
        const auto count = static_cast<long long>(cluster.size());
        // Compare |count*p - sum|^2 to stay in integers.
        Pixel best = cluster.front();
        long long best_d = std::numeric_limits<long long>::max();
        for (Pixel p : cluster) {
          const long long dx = count * p.x - sx;
          const long long dy = count * p.y - sy;
          const long long d = dx * dx + dy * dy;
          if (d < best_d) {
            best_d = d;
            best = p;
          }
        }
        add_node(std::move(cluster), best, false);
      }
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> direct_links;
  auto add_edge = [&](std::vector<Pixel> polyline, int from, int to) {
    Segment seg;
    seg.id = static_cast<int>(graph.edges.size());
    seg.polyline = std::move(polyline);
    seg.from_node = from;
    seg.to_node = to;
    graph.edges.push_back(std::move(seg));
  };

  // Walks degree-2 pixels from `start` (already pushed) until a node pixel.
  auto trace = [&](std::vector<Pixel> poly, Pixel prev, Pixel cur) {
    while (true) {
      Pixel next{-1, -1};
      for (Pixel d : kNeighbors8) {
        const Pixel r{cur.x + d.x, cur.y + d.y};
        if (skel.test(r) && !(r == prev)) {
          next = r;
          break;
        }
      }
      if (next.x < 0) return std::pair{std::move(poly), -1};
      poly.push_back(next);
      if (node_of[next] >= 0) return std::pair{std::move(poly), node_of[next]};
      visited[next] = 1;
      prev = cur;
      cur = next;
    }
  };

  const int regular_nodes = static_cast<int>(graph.nodes.size());
  for (int id = 0; id < regular_nodes; ++id) {
    const std::vector<Pixel> pixels = graph.nodes[id].pixels;
    if (pixels.size() == 1 && degree2[pixels.front()] == 0) {
      add_edge({pixels.front()}, id, id);
      continue;
    }
    for (Pixel c : pixels) {
      for (Pixel d : kNeighbors8) {
        const Pixel q{c.x + d.x, c.y + d.y};
        if (!skel.test(q) || node_of[q] == id) continue;
        if (node_of[q] >= 0) {
          const std::size_t a = skel.index(c.x, c.y);
          const std::size_t b = skel.index(q.x, q.y);
          if (direct_links.insert(std::minmax(a, b)).second) add_edge({c, q}, id, node_of[q]);
          continue;
        }
        if (visited[q]) continue;
        visited[q] = 1;
        auto [poly, end] = trace({c, q}, c, q);
        add_edge(std::move(poly), id, end < 0 ? id : end);
      }
    }
  }

  // Pure loops: every remaining pixel has exactly two neighbours.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!skel(x, y) || node_of(x, y) >= 0 || visited(x, y)) continue;
      const Pixel anchor{x, y};
      const int id = add_node({anchor}, anchor, true);
      Pixel first{-1, -1};
      for (Pixel d : kNeighbors8) {
        const Pixel q{x + d.x, y + d.y};
        if (skel.test(q)) {
          first = q;
          break;
        }
      }
      visited[first] = 1;
      auto [poly, end] = trace({anchor, first}, anchor, first);
      add_edge(std::move(poly), id, end < 0 ? id : end);
    }
  }

  graph.adjacency.assign(graph.nodes.size(), {});
  for (const Segment& seg : graph.edges) {
    if (seg.polyline.size() == 1) {
      graph.nodes[seg.from_node].degree = 1;
    } else {
      ++graph.nodes[seg.from_node].degree;
      ++graph.nodes[seg.to_node].degree;
    }
    graph.adjacency[seg.from_node].push_back(seg.id);
    if (seg.to_node != seg.from_node) graph.adjacency[seg.to_node].push_back(seg.id);
  }
  return graph;
}

std::vector<Segment> segments(const SkeletonGraph& graph) { return graph.edges; }

SkeletonMask prune_spurs(const SkeletonMask& skel, int min_length_px) {
  SkeletonMask out = skel;
  if (min_length_px <= 1) return out;
  const SkeletonGraph graph = build_graph(skel);
  int x0 = out.width(), y0 = out.height(), x1 = -1, y1 = -1;
  for (const Segment& seg : graph.edges) {
    if (seg.polyline.size() < 2 || seg.from_node == seg.to_node) continue;
    const GraphNode& a = graph.nodes[seg.from_node];
    const GraphNode& b = graph.nodes[seg.to_node];
    const bool a_free = a.degree == 1 && !a.loop_anchor;
    const bool b_free = b.degree == 1 && !b.loop_anchor;
    if (a_free == b_free) continue;
    const GraphNode& junction = a_free ? b : a;
    if (junction.degree < 3) continue;
    // Pixels beyond the junction pixel.
    if (static_cast<int>(seg.polyline.size()) - 1 >= min_length_px) continue;
    for (Pixel p : seg.polyline) {
      if (std::find(junction.pixels.begin(), junction.pixels.end(), p) != junction.pixels.end()) continue;
      out.set(p, false);
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  }
  if (x1 >= 0) remove_redundant_pixels(out, x0 - 2, y0 - 2, x1 + 2, y1 + 2);
  return out;
}

namespace {

template <typename Pred>
ComponentLabels label_components(int w, int h, Pred is_member) {
  ComponentLabels result{Grid<int>(w, h, 0), 0};
  std::vector<Pixel> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!is_member(x, y) || result.labels(x, y) != 0) continue;
      const int label = ++result.count;
      result.labels(x, y) = label;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (Pixel d : kNeighbors8) {
          const int nx = p.x + d.x;
          const int ny = p.y + d.y;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (!is_member(nx, ny) || result.labels(nx, ny) != 0) continue;
          result.labels(nx, ny) = label;
          stack.push_back({nx, ny});
        }
      }
    }
  }
  return result;
}

}  // namespace

ComponentLabels connected_components(const BinaryMask& mask) {
  return label_components(mask.width(), mask.height(), [&](int x, int y) { return mask(x, y) != 0; });
}

ComponentLabels connected_components(const GradeMask& mask, Label label) {
  return label_components(mask.width(), mask.height(), [&](int x, int y) { return mask(x, y) == label; });
}

nlohmann::json graph_to_json(const SkeletonGraph& graph) {
  auto pixel_list = [](const std::vector<Pixel>& pixels) {
    nlohmann::json arr = nlohmann::json::array();
    for (Pixel p : pixels) arr.push_back({p.x, p.y});
    return arr;
  };
  nlohmann::json nodes = nlohmann::json::array();
  for (const GraphNode& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"x", n.position.x},
                     {"y", n.position.y},
                     {"degree", n.degree},
                     {"loop_anchor", n.loop_anchor},
                     {"pixels", pixel_list(n.pixels)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Segment& s : graph.edges) {
    edges.push_back({{"id", s.id}, {"from", s.from_node}, {"to", s.to_node}, {"polyline", pixel_list(s.polyline)}});
  }
  return {{"width", graph.width}, {"height", graph.height}, {"nodes", nodes}, {"edges", edges}};
}

SkeletonGraph graph_from_json(const nlohmann::json& json) {
  try {
    auto pixels = [](const nlohmann::json& arr) {
      std::vector<Pixel> out;
      for (const auto& p : arr) out.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
      return out;
    };
    SkeletonGraph graph;
    graph.width = json.at("width").get<int>();
    graph.height = json.at("height").get<int>();
    for (const auto& n : json.at("nodes")) {
      GraphNode node;
      node.id = n.at("id").get<int>();
      node.position = {n.at("x").get<int>(), n.at("y").get<int>()};
      node.degree = n.at("degree").get<int>();
      node.loop_anchor = n.value("loop_anchor", false);
      node.pixels = pixels(n.at("pixels"));
      graph.nodes.push_back(std::move(node));
    }
    for (const auto& e : json.at("edges")) {
      Segment seg;
      seg.id = e.at("id").get<int>();
      seg.from_node = e.at("from").get<int>();
      seg.to_node = e.at("to").get<int>();
      seg.polyline = pixels(e.at("polyline"));
      graph.edges.push_back(std::move(seg));
    }
    graph.adjacency.assign(graph.nodes.size(), {});
    for (const Segment& seg : graph.edges) {
      const int n = static_cast<int>(graph.nodes.size());
      if (seg.from_node < 0 || seg.from_node >= n || seg.to_node < 0 || seg.to_node >= n) {
        throw Error(ErrorCode::ParseError, "edge " + std::to_string(seg.id) + " references a missing node");
      }
      graph.adjacency[seg.from_node].push_back(seg.id);
      if (seg.to_node != seg.from_node) graph.adjacency[seg.to_node].push_back(seg.id);
    }
    return graph;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("graph JSON: ") + e.what());
  }
}

}  // namespace roadkit
