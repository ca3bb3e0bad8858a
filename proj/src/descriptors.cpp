#include "roadkit/descriptors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "roadkit/distance.hpp"

namespace roadkit {

std::string_view to_string(LengthWord w) noexcept {
  switch (w) {
    case LengthWord::Short: return "short";
    case LengthWord::Medium: return "medium";
    case LengthWord::Long: return "long";
  }
  return "short";
}

std::string_view to_string(WidthWord w) noexcept {
  switch (w) {
    case WidthWord::Narrow: return "narrow";
    case WidthWord::Medium: return "medium";
    case WidthWord::Wide: return "wide";
  }
  return "narrow";
}

std::string_view to_string(ShapeWord w) noexcept { return w == ShapeWord::Straight ? "straight" : "curvy"; }
std::string_view to_string(ContextWord w) noexcept { return w == ContextWord::Dense ? "dense" : "sparse"; }

void DescriptorThresholds::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidThresholds, msg); };
  for (double v : {length_medium_m, length_long_m, width_medium_m, width_wide_m, straight_min, dense_min}) {
    if (!std::isfinite(v)) fail("thresholds must be finite");
  }
  if (!(length_medium_m > 0.0 && length_medium_m < length_long_m)) {
    fail("length thresholds must satisfy 0 < medium < long");
  }
  if (!(width_medium_m > 0.0 && width_medium_m < width_wide_m)) {
    fail("width thresholds must satisfy 0 < medium < wide");
  }
  if (straight_min < 0.0 || straight_min > 1.0) fail("straightness threshold must lie in [0,1]");
  if (dense_min < 0.0 || dense_min > 1.0) fail("density threshold must lie in [0,1]");
}

double segment_length(const Segment& seg, double resolution_m) {
  if (seg.polyline.empty()) throw Error(ErrorCode::EmptySegment, "segment " + std::to_string(seg.id));
  // Counting step kinds keeps the sum independent of traversal direction.
  long long axis = 0, diagonal = 0;
  for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
    const long long d2 = squared_distance(seg.polyline[i - 1], seg.polyline[i]);
    if (d2 == 1) {
      ++axis;
    } else if (d2 == 2) {
      ++diagonal;
    } else {
      throw Error(ErrorCode::DegeneratePath, "segment " + std::to_string(seg.id) + " is not 8-connected");
    }
  }
  return (static_cast<double>(axis) + static_cast<double>(diagonal) * std::numbers::sqrt2) * resolution_m;
}

double mean_width(const Segment& seg, const Grid<double>& edt, double resolution_m) {
  if (seg.polyline.empty()) throw Error(ErrorCode::EmptySegment, "segment " + std::to_string(seg.id));
  std::vector<double> widths;
  widths.reserve(seg.polyline.size());
  for (Pixel p : seg.polyline) {
    const double d = edt.value_or(p.x, p.y, 0.0);
    if (d <= 0.0) {
      throw Error(ErrorCode::SegmentOutsideMask, "segment " + std::to_string(seg.id) + " pixel (" +
                                                     std::to_string(p.x) + "," + std::to_string(p.y) +
                                                     ") is not road");
    }
    widths.push_back(2.0 * d - 1.0);
  }
  std::sort(widths.begin(), widths.end());
  double sum = 0.0;
  for (double w : widths) sum += w;
  return sum / static_cast<double>(widths.size()) * resolution_m;
}

double mean_width(const Segment& seg, const BinaryMask& mask, double resolution_m) {
  return mean_width(seg, euclidean_distance_transform(mask), resolution_m);
}

double straightness(const Segment& seg) {
  if (seg.polyline.size() < 2) return 1.0;
  const double path = segment_length(seg, 1.0);
  if (path <= 0.0) return 1.0;
  const double chord = euclidean(seg.polyline.front(), seg.polyline.back());
  return std::clamp(chord / path, 0.0, 1.0);
}

namespace {

// Samples relative to the first pixel, so the turn angles do not depend on
// where the segment sits in the raster.
std::vector<Point2> resample_relative(const Segment& seg, double step_px) {
  std::vector<Point2> out;
  if (seg.polyline.empty() || !(step_px > 0.0)) return out;
  const Pixel origin = seg.polyline.front();
  auto to_point = [origin](Pixel p) {
    return Point2{static_cast<double>(p.x - origin.x), static_cast<double>(p.y - origin.y)};
  };
  out.push_back({0.0, 0.0});
  double next = step_px;
  double walked = 0.0;
  for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
    const Point2 a = to_point(seg.polyline[i - 1]);
    const Point2 b = to_point(seg.polyline[i]);
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    while (len > 0.0 && walked + len >= next - 1e-12) {
      const double t = (next - walked) / len;
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      next += step_px;
    }
    walked += len;
  }
  return out;
}

}  // namespace

std::vector<Point2> resample_polyline(const Segment& seg, double step_px) {
  std::vector<Point2> out = resample_relative(seg, step_px);
  if (out.empty()) return out;
  const Pixel origin = seg.polyline.front();
  for (Point2& q : out) {
    q.x += origin.x;
    q.y += origin.y;
  }
  return out;
}

Curvature mean_curvature(const Segment& seg, double resolution_m, double step_px) {
  const std::vector<Point2> samples = resample_relative(seg, step_px);
  if (samples.size() < 3) return {0.0, true};
  std::vector<double> turns;
  for (std::size_t k = 1; k + 1 < samples.size(); ++k) {
    const double ax = samples[k].x - samples[k - 1].x;
    const double ay = samples[k].y - samples[k - 1].y;
    const double bx = samples[k + 1].x - samples[k].x;
    const double by = samples[k + 1].y - samples[k].y;
    turns.push_back(std::abs(std::atan2(ax * by - ay * bx, ax * bx + ay * by)));
  }
  std::sort(turns.begin(), turns.end());
  double total = 0.0;
  for (double t : turns) total += t;
  const double mean_turn = total / static_cast<double>(turns.size());
  return {mean_turn / (step_px * resolution_m), false};
}

int node_degree(const Segment& seg, const SkeletonGraph& graph) {
  const int a = graph.nodes.at(static_cast<std::size_t>(seg.from_node)).degree;
  const int b = graph.nodes.at(static_cast<std::size_t>(seg.to_node)).degree;
  return std::max({a, b, 1});
}

double local_density(const Segment& seg, const SkeletonMask& skel, int radius_px) {
  if (seg.polyline.empty() || radius_px < 1) return 0.0;
  const Pixel mid = seg.polyline[seg.polyline.size() / 2];
  std::set<std::pair<int, int>> own;
  for (Pixel p : seg.polyline) own.insert({p.x, p.y});
  const long long r2 = static_cast<long long>(radius_px) * radius_px;
  long long count = 0;
  for (int y = mid.y - radius_px; y <= mid.y + radius_px; ++y) {
    for (int x = mid.x - radius_px; x <= mid.x + radius_px; ++x) {
      if (!skel.test(x, y) || squared_distance({x, y}, mid) > r2) continue;
      if (own.contains({x, y})) continue;
      ++count;
    }
  }
  const double area = std::numbers::pi * static_cast<double>(r2);
  return std::clamp(static_cast<double>(count) / area, 0.0, 1.0);
}

double orientation_variability(const Segment& seg, double step_px) {
  const std::vector<Point2> samples = resample_relative(seg, step_px);
  if (samples.size() < 3) return 0.0;
  double sc = 0.0, ss = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double t = std::atan2(samples[k].y - samples[k - 1].y, samples[k].x - samples[k - 1].x);
    sc += std::cos(t);
    ss += std::sin(t);
  }
  const double n = static_cast<double>(samples.size() - 1);
  const double r = std::clamp(std::hypot(sc, ss) / n, 1e-12, 1.0);
  return rad_to_deg(std::sqrt(-2.0 * std::log(r)));
}

int lane_count_proxy(double width_m, double lane_width_m) {
  return std::max(1, static_cast<int>(std::lround(width_m / lane_width_m)));
}

std::vector<DescriptorVector> describe_segments(const SkeletonGraph& graph, const BinaryMask& mask,
                                                const SkeletonMask& skel, const DescriptorOptions& options) {
  const Grid<double> edt = euclidean_distance_transform(mask);
  std::vector<DescriptorVector> out;
  out.reserve(graph.edges.size());
  for (const Segment& seg : graph.edges) {
    DescriptorVector v;
    v.segment_id = seg.id;
    v.length_m = segment_length(seg, options.resolution_m);
    v.width_m = mean_width(seg, edt, options.resolution_m);
    v.straightness = straightness(seg);
    const Curvature c = mean_curvature(seg, options.resolution_m, options.curvature_step_px);
    v.curvature = c.value;
    v.curvature_too_short = c.too_short;
    v.node_degree = node_degree(seg, graph);
    v.density = local_density(seg, skel, options.density_radius_px);
    if (options.extra_descriptors) {
      v.orientation_variability_deg = orientation_variability(seg, options.curvature_step_px);
      v.lane_count = lane_count_proxy(v.width_m, options.lane_width_m);
    }
    out.push_back(v);
  }
  return out;
}

DescriptorCategories discretize(const DescriptorVector& v, const DescriptorThresholds& t) {
  t.validate();
  DescriptorCategories c;
  c.length = v.length_m >= t.length_long_m     ? LengthWord::Long
             : v.length_m >= t.length_medium_m ? LengthWord::Medium
                                               : LengthWord::Short;
  c.width = v.width_m >= t.width_wide_m     ? WidthWord::Wide
            : v.width_m >= t.width_medium_m ? WidthWord::Medium
                                            : WidthWord::Narrow;
  c.shape = v.straightness >= t.straight_min ? ShapeWord::Straight : ShapeWord::Curvy;
  c.context = v.density >= t.dense_min ? ContextWord::Dense : ContextWord::Sparse;
  return c;
}

namespace {

constexpr const char* kCsvHeader =
    "segment_id,length_m,width_m,straightness,curvature,curvature_too_short,node_degree,density,"
    "orientation_variability_deg,lane_count,length_word,width_word,shape_word,context_word";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& column, int row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError,
                "descriptor CSV row " + std::to_string(row) + ", column " + column + ": '" + s + "'");
  }
  return v;
}

}  // namespace

void write_descriptor_csv(std::ostream& out, std::span<const DescriptorVector> rows,
                          const DescriptorThresholds& thresholds) {
  out << kCsvHeader << '\n';
  for (const DescriptorVector& v : rows) {
    const DescriptorCategories c = discretize(v, thresholds);
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", v.segment_id, v.length_m, v.width_m,
                       v.straightness, v.curvature, v.curvature_too_short ? 1 : 0, v.node_degree, v.density,
                       v.orientation_variability_deg ? fmt::format("{}", *v.orientation_variability_deg) : "",
                       v.lane_count ? fmt::format("{}", *v.lane_count) : "", to_string(c.length),
                       to_string(c.width), to_string(c.shape), to_string(c.context));
  }
}

std::vector<DescriptorVector> read_descriptor_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "descriptor CSV is empty");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const char* required : {"segment_id", "length_m", "width_m", "straightness", "curvature", "node_degree",
                               "density"}) {
    if (!column.contains(required)) {
      throw Error(ErrorCode::ParseError, std::string("descriptor CSV lacks column ") + required);
    }
  }
  std::vector<DescriptorVector> rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "descriptor CSV row " + std::to_string(row) + " has " +
                                             std::to_string(f.size()) + " fields");
    }
    auto get = [&](const char* name) { return parse_double(f[column[name]], name, row); };
    DescriptorVector v;
    v.segment_id = static_cast<int>(get("segment_id"));
    v.length_m = get("length_m");
    v.width_m = get("width_m");
    v.straightness = get("straightness");
    v.curvature = get("curvature");
    v.node_degree = static_cast<int>(get("node_degree"));
    v.density = get("density");
    if (column.contains("curvature_too_short")) v.curvature_too_short = get("curvature_too_short") != 0.0;
    if (column.contains("orientation_variability_deg") && !f[column["orientation_variability_deg"]].empty()) {
      v.orientation_variability_deg = get("orientation_variability_deg");
    }
    if (column.contains("lane_count") && !f[column["lane_count"]].empty()) {
      v.lane_count = static_cast<int>(get("lane_count"));
    }
    rows.push_back(v);
  }
  return rows;
}

nlohmann::json descriptors_to_json(std::span<const DescriptorVector> rows, const DescriptorThresholds& thresholds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const DescriptorVector& v : rows) {
    const DescriptorCategories c = discretize(v, thresholds);
    nlohmann::json row = {{"segment_id", v.segment_id},
                          {"length_m", v.length_m},
                          {"width_m", v.width_m},
                          {"straightness", v.straightness},
                          {"curvature", v.curvature},
                          {"curvature_too_short", v.curvature_too_short},
                          {"node_degree", v.node_degree},
                          {"density", v.density},
                          {"length_word", to_string(c.length)},
                          {"width_word", to_string(c.width)},
                          {"shape_word", to_string(c.shape)},
                          {"context_word", to_string(c.context)}};
    if (v.orientation_variability_deg) row["orientation_variability_deg"] = *v.orientation_variability_deg;
    if (v.lane_count) row["lane_count"] = *v.lane_count;
    arr.push_back(std::move(row));
  }
  return arr;
}

}  // namespace roadkit
