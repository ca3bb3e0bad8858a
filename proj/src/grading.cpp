#include "roadkit/grading.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "roadkit/distance.hpp"

namespace roadkit {

GradeScores normalize_scores(const GradeScores& scores) {
  for (double v : scores.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteScore, "grade score is not finite");
    if (v < 0.0) throw Error(ErrorCode::MalformedResponse, "grade score is negative");
  }
  const double total = scores.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::MalformedResponse, "grade scores sum to zero");
  GradeScores out;
  for (std::size_t i = 0; i < 3; ++i) out.values[i] = scores.values[i] / total;
  return out;
}

Grade argmax(const GradeScores& scores) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (scores.values[i] > scores.values[best]) best = i;
  }
  return kGrades[best];
}

PromptSet build_prompt(const DescriptorCategories& c) {
  const std::string_view area = c.context == ContextWord::Dense ? "an urban" : "a rural";
  PromptSet p;
  p.description = "a " + std::string(to_string(c.length)) + " and " + std::string(to_string(c.width)) +
                  " road segment in " + std::string(area) + " area";
  for (Grade g : kGrades) {
    p.queries[grade_index(g)] = p.description + "; this is a " + std::string(grade_name(g)) + " grade road";
  }
  return p;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

GradeScores heuristic_prior(const DescriptorVector& v) {
  constexpr double kLowCut = -1.5;
  constexpr double kHighCut = 1.5;
  const double length = std::max(v.length_m, 0.1);
  const double s = 0.4 * (v.width_m - 9.0) + 0.8 * std::log(length / 300.0) + 3.0 * (v.straightness - 0.85);
  const double above_low = sigmoid(s - kLowCut);
  const double above_medium = sigmoid(s - kHighCut);
  GradeScores out;
  out[Grade::High] = above_medium;
  out[Grade::Medium] = above_low - above_medium;
  out[Grade::Low] = 1.0 - above_low;
  return normalize_scores(out);
}

std::optional<Grade> try_parse_grade_text(std::string_view text) noexcept {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));

  const auto n = static_cast<long>(tokens.size());
  for (long i = 0; i < n; ++i) {
    const std::optional<Grade> g = grade_from_name(tokens[i]);
    if (!g) continue;
    for (long j = std::max(0L, i - 2); j <= std::min(n - 1, i + 2); ++j) {
      if (j != i && (tokens[j] == "grade" || tokens[j] == "road")) return g;
    }
  }
  return std::nullopt;
}

Grade parse_grade_text(std::string_view text) {
  if (auto g = try_parse_grade_text(text)) return *g;
  throw Error(ErrorCode::NoGradeFound, "no grade in text: \"" + std::string(text) + "\"");
}

std::string render_grade_text(Grade g) {
  switch (g) {
    case Grade::High: return "This is a High Grade road.";
    case Grade::Medium: return "This is a Medium Grade road.";
    case Grade::Low: return "This is a Low Grade road.";
  }
  return {};
}

void FusionConfig::validate() const {
  for (double w : {geom, vlm, lang}) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::InvalidConfig, "fusion weights must be finite and >= 0");
  }
  if (!(geom + vlm + lang > 0.0)) throw Error(ErrorCode::AllWeightsZero, "fusion weights are all zero");
}

GradeScores fused_scores(const GradeScores& geom, const GradeScores& vlm, std::optional<Grade> lang,
                         const FusionConfig& cfg) {
  cfg.validate();
  double wg = cfg.geom, wv = cfg.vlm, wl = lang ? cfg.lang : 0.0;
  const double total = wg + wv + wl;
  if (!(total > 0.0)) throw Error(ErrorCode::AllWeightsZero, "no fusion weight left without a language grade");
  if (!lang) {
    wg /= total;
    wv /= total;
  }
  GradeScores out;
  for (Grade g : kGrades) {
    out[g] = wg * geom[g] + wv * vlm[g] + (lang && *lang == g ? wl : 0.0);
  }
  return out;
}

Grade fuse(const GradeScores& geom, const GradeScores& vlm, std::optional<Grade> lang, const FusionConfig& cfg) {
  return argmax(fused_scores(geom, vlm, lang, cfg));
}

Grid<int> graded_skeleton(const SkeletonGraph& graph, std::span<const std::optional<Grade>> grades, int width,
                          int height) {
  if (grades.size() != graph.edges.size()) {
    throw Error(ErrorCode::UngradedSegment, std::to_string(graph.edges.size()) + " segments but " +
                                                std::to_string(grades.size()) + " grades");
  }
  Grid<int> out(width, height, -1);
  auto mark = [&](Pixel p, Grade g) {
    if (!out.contains(p.x, p.y)) return;
    const int idx = static_cast<int>(grade_index(g));
    if (out[p] < 0 || idx < out[p]) out[p] = idx;
  };
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    if (!grades[i]) throw Error(ErrorCode::UngradedSegment, "segment " + std::to_string(graph.edges[i].id));
    for (Pixel p : graph.edges[i].polyline) mark(p, *grades[i]);
  }
  for (const GraphNode& node : graph.nodes) {
    for (int e : graph.adjacency[node.id]) {
      for (Pixel p : node.pixels) mark(p, *grades[static_cast<std::size_t>(e)]);
    }
  }
  return out;
}

namespace {

long long isqrt(long long v) {
  auto r = static_cast<long long>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

// Raster-first site at exactly squared distance d2 from p.
template <class IsSite>
Pixel site_at_distance(Pixel p, long long d2, IsSite is_site) {
  const long long r = isqrt(d2);
  for (long long dy = -r; dy <= r; ++dy) {
    const long long rem = d2 - dy * dy;
    const long long dx = isqrt(rem);
    if (dx * dx != rem) continue;
    const Pixel left{p.x - static_cast<int>(dx), p.y + static_cast<int>(dy)};
    const Pixel right{p.x + static_cast<int>(dx), p.y + static_cast<int>(dy)};
    if (is_site(left)) return left;
    if (is_site(right)) return right;
  }
  throw Error(ErrorCode::UngradedSegment, "no skeleton pixel at the transform distance");
}

}  // namespace

GradeMask render_grade_mask(const SkeletonGraph& graph, std::span<const std::optional<Grade>> grades,
                            const BinaryMask& mask) {
  const Grid<int> sites = graded_skeleton(graph, grades, mask.width(), mask.height());
  const ComponentLabels comps = connected_components(mask);
  GradeMask out(mask.width(), mask.height(), Label::Background);
  if (comps.count == 0) return out;

  struct Box {
    int x0 = INT32_MAX, y0 = INT32_MAX, x1 = -1, y1 = -1;
    bool has_site = false;
  };
  std::vector<Box> boxes(static_cast<std::size_t>(comps.count) + 1);
  bool any_site = false;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (sites(x, y) >= 0) any_site = true;
      const int c = comps.labels(x, y);
      if (c == 0) continue;
      Box& b = boxes[c];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
      if (sites(x, y) >= 0) b.has_site = true;
    }
  }
  if (!any_site) throw Error(ErrorCode::UngradedSegment, "road mask has no graded skeleton pixel");

  auto grade_of = [&](Pixel site) { return to_label(kGrades[static_cast<std::size_t>(sites[site])]); };

  std::optional<Grid<long long>> global;
  for (int c = 1; c <= comps.count; ++c) {
    const Box& b = boxes[c];
    if (b.has_site) {
      BinaryMask local(b.x1 - b.x0 + 1, b.y1 - b.y0 + 1);
      for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) {
          if (comps.labels(x, y) == c && sites(x, y) >= 0) local.set(x - b.x0, y - b.y0, true);
        }
      }
      const Grid<long long> d2 = squared_distance_to_sites(local);
      auto is_site = [&](Pixel q) { return local.test(q.x - b.x0, q.y - b.y0); };
      for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) {
          if (comps.labels(x, y) != c) continue;
          out(x, y) = grade_of(site_at_distance({x, y}, d2(x - b.x0, y - b.y0), is_site));
        }
      }
    } else {
      if (!global) {
        BinaryMask all(mask.width(), mask.height());
        for (int y = 0; y < mask.height(); ++y) {
          for (int x = 0; x < mask.width(); ++x) all.set(x, y, sites(x, y) >= 0);
        }
        global = squared_distance_to_sites(all);
      }
      auto is_site = [&](Pixel q) { return sites.contains(q.x, q.y) && sites[q] >= 0; };
      for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) {
          if (comps.labels(x, y) != c) continue;
          out(x, y) = grade_of(site_at_distance({x, y}, (*global)(x, y), is_site));
        }
      }
    }
  }
  return out;
}

}  // namespace roadkit
