#include "roadkit/dataset_tools.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace roadkit {
namespace {

std::string describe_id(const nlohmann::json& id) { return id.is_string() ? id.get<std::string>() : id.dump(); }

[[noreturn]] void field_error(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::ParseError, where + ": " + msg);
}

}  // namespace

CenterlineFile parse_centerlines(const nlohmann::json& json) {
  if (!json.is_object()) field_error("$", "top level must be an object");
  CenterlineFile file;
  for (const auto& [key, value] : json.items()) {
    if (key != "resolution_m" && key != "units" && key != "lines") file.extra[key] = value;
  }
  if (!json.contains("resolution_m") || !json["resolution_m"].is_number()) {
    field_error("$.resolution_m", "missing or not a number");
  }
  file.resolution_m = json["resolution_m"].get<double>();
  if (!std::isfinite(file.resolution_m) || file.resolution_m <= 0.0) field_error("$.resolution_m", "must be > 0");
  if (json.contains("units")) {
    file.units_explicit = true;
    const auto& u = json["units"];
    if (u == "m") {
      file.units_in_meters = true;
    } else if (u != "px") {
      field_error("$.units", "must be \"px\" or \"m\"");
    }
  }
  if (!json.contains("lines") || !json["lines"].is_array()) field_error("$.lines", "missing or not an array");

  const auto& lines = json["lines"];
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "$.lines[" + std::to_string(i) + "]";
    const auto& obj = lines[i];
    if (!obj.is_object()) field_error(where, "must be an object");
    CenterlineLine line;
    for (const auto& [key, value] : obj.items()) {
      if (key != "id" && key != "grade" && key != "points" && key != "width_m") line.extra[key] = value;
    }
    if (!obj.contains("id") || !(obj["id"].is_string() || obj["id"].is_number_integer())) {
      field_error(where + ".id", "missing or not a string/integer");
    }
    line.id = obj["id"];
    if (!obj.contains("grade") || !obj["grade"].is_string()) field_error(where + ".grade", "missing or not a string");
    const std::string grade = obj["grade"].get<std::string>();
    const std::optional<Grade> g = grade_from_name(grade);
    if (!g) {
      throw Error(ErrorCode::InvalidGrade, "line " + describe_id(line.id) + ": unknown grade \"" + grade + "\"");
    }
    line.grade = *g;
    if (!obj.contains("points") || !obj["points"].is_array()) field_error(where + ".points", "missing or not an array");
    const auto& pts = obj["points"];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& pt = pts[k];
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        field_error(where + ".points[" + std::to_string(k) + "]", "must be [x, y]");
      }
      const Point2 p{pt[0].get<double>(), pt[1].get<double>()};
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        field_error(where + ".points[" + std::to_string(k) + "]", "coordinates must be finite");
      }
      line.points.push_back(p);
    }
    if (line.points.size() < 2) {
      throw Error(ErrorCode::TooFewPoints, "line " + describe_id(line.id) + " has " +
                                               std::to_string(line.points.size()) + " point(s), needs 2");
    }
    if (obj.contains("width_m")) {
      if (!obj["width_m"].is_number()) field_error(where + ".width_m", "not a number");
      const double w = obj["width_m"].get<double>();
      if (!std::isfinite(w) || w <= 0.0) field_error(where + ".width_m", "must be > 0");
      line.width_m = w;
    }
    file.lines.push_back(std::move(line));
  }
  return file;
}

CenterlineFile load_centerlines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  return parse_centerlines(json);
}

nlohmann::json centerlines_to_json(const CenterlineFile& file) {
  nlohmann::json out = file.extra;
  out["resolution_m"] = file.resolution_m;
  if (file.units_explicit || file.units_in_meters) out["units"] = file.units_in_meters ? "m" : "px";
  nlohmann::json lines = nlohmann::json::array();
  for (const CenterlineLine& line : file.lines) {
    nlohmann::json obj = line.extra;
    obj["id"] = line.id;
    obj["grade"] = grade_name(line.grade);
    nlohmann::json pts = nlohmann::json::array();
    for (const Point2& p : line.points) pts.push_back({p.x, p.y});
    obj["points"] = std::move(pts);
    if (line.width_m) obj["width_m"] = *line.width_m;
    lines.push_back(std::move(obj));
  }
  out["lines"] = std::move(lines);
  return out;
}

void save_centerlines(const CenterlineFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << centerlines_to_json(file).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::vector<Point2> pixel_points(const CenterlineLine& line, const CenterlineFile& file) {
  if (!file.units_in_meters) return line.points;
  std::vector<Point2> out;
  out.reserve(line.points.size());
  for (const Point2& p : line.points) out.push_back({p.x / file.resolution_m, p.y / file.resolution_m});
  return out;
}

WidthCatalog WidthCatalog::standard() {
  std::vector<double> widths;
  for (double lane : {3.25, 3.5, 3.75}) {
    for (int count : {2, 4, 6, 8}) widths.push_back(lane * count);
  }
  return from(std::move(widths));
}

WidthCatalog WidthCatalog::from(std::vector<double> widths) {
  for (double w : widths) {
    if (!std::isfinite(w) || w <= 0.0) throw Error(ErrorCode::InvalidWidth, "catalog widths must be > 0");
  }
  std::sort(widths.begin(), widths.end());
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  return {std::move(widths)};
}

double select_buffer_width(double observed_m, const WidthCatalog& catalog) {
  if (catalog.widths.empty()) throw Error(ErrorCode::EmptyCatalog, "width catalog is empty");
  if (!std::isfinite(observed_m) || observed_m <= 0.0) {
    throw Error(ErrorCode::InvalidWidth, "observed width must be > 0");
  }
  double best = catalog.widths.front();
  for (double w : catalog.widths) {
    if (std::abs(w - observed_m) < std::abs(best - observed_m)) best = w;
  }
  return best;
}

double default_width_m(Grade g) noexcept {
  switch (g) {
    case Grade::High: return 15.0;
    case Grade::Medium: return 14.0;
    case Grade::Low: return 6.5;
  }
  return 6.5;
}

BinaryMask buffer_rasterize(std::span<const Point2> line, double width_m, int width, int height,
                            double resolution_m) {
  if (line.size() < 2) throw Error(ErrorCode::DegenerateLine, "a buffered line needs at least 2 points");
  bool moves = false;
  for (std::size_t i = 1; i < line.size(); ++i) moves = moves || line[i].x != line[0].x || line[i].y != line[0].y;
  if (!moves) throw Error(ErrorCode::DegenerateLine, "all line points coincide");
  if (!(resolution_m > 0.0) || !std::isfinite(width_m) || width_m < resolution_m) {
    throw Error(ErrorCode::InvalidWidth, "buffer width must be at least the raster resolution");
  }
  const double half = width_m / (2.0 * resolution_m);
  BinaryMask out(width, height, resolution_m);
  double x0 = line[0].x, x1 = x0, y0 = line[0].y, y1 = y0;
  for (const Point2& p : line) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int xs = std::max(0, static_cast<int>(std::floor(x0 - half)));
  const int xe = std::min(width - 1, static_cast<int>(std::ceil(x1 + half)));
  const int ys = std::max(0, static_cast<int>(std::floor(y0 - half)));
  const int ye = std::min(height - 1, static_cast<int>(std::ceil(y1 + half)));
  for (int y = ys; y <= ye; ++y) {
    for (int x = xs; x <= xe; ++x) {
      if (point_polyline_distance({static_cast<double>(x), static_cast<double>(y)}, line) <= half) out.set(x, y);
    }
  }
  return out;
}

double line_buffer_width(const CenterlineLine& line, const BufferOptions& options) {
  if (options.fixed_width_m) return *options.fixed_width_m;
  return select_buffer_width(line.width_m.value_or(default_width_m(line.grade)), options.catalog);
}

BinaryMask rasterize_centerlines(const CenterlineFile& file, int width, int height, const BufferOptions& options) {
  BinaryMask out(width, height, file.resolution_m);
  for (const CenterlineLine& line : file.lines) {
    const std::vector<Point2> pts = pixel_points(line, file);
    const BinaryMask one = buffer_rasterize(pts, line_buffer_width(line, options), width, height, file.resolution_m);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (one.values()[i]) out.values()[i] = 1;
    }
  }
  return out;
}

GradeMask rasterize_grade_mask(const CenterlineFile& file, int width, int height, const BufferOptions& options) {
  GradeMask out(width, height, Label::Background);
  for (const CenterlineLine& line : file.lines) {
    const std::vector<Point2> pts = pixel_points(line, file);
    const BinaryMask one = buffer_rasterize(pts, line_buffer_width(line, options), width, height, file.resolution_m);
    const Label label = to_label(line.grade);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!one.values()[i]) continue;
      Label& cur = out.values()[i];
      if (cur == Label::Background || static_cast<int>(label) > static_cast<int>(cur)) cur = label;
    }
  }
  return out;
}

SplitCounts split_counts(std::size_t n) noexcept {
  constexpr std::size_t kTrain = 871, kVal = 108, kTotal = 1079;
  SplitCounts c;
  c.train = std::min(n, (2 * n * kTrain + kTotal) / (2 * kTotal));
  c.val = std::min(n - c.train, (2 * n * kVal + kTotal) / (2 * kTotal));
  c.test = n - c.train - c.val;
  return c;
}

Manifest make_manifest(std::vector<std::string> names, std::uint64_t seed) {
  if (names.empty()) throw Error(ErrorCode::EmptyDirectory, "no tiles to split");
  std::sort(names.begin(), names.end());
  std::mt19937_64 rng(seed);
  std::shuffle(names.begin(), names.end(), rng);
  const SplitCounts c = split_counts(names.size());
  Manifest m;
  const auto train_end = names.begin() + static_cast<std::ptrdiff_t>(c.train);
  const auto val_end = train_end + static_cast<std::ptrdiff_t>(c.val);
  m.train.assign(names.begin(), train_end);
  m.val.assign(train_end, val_end);
  m.test.assign(val_end, names.end());
  return m;
}

Manifest make_manifest(const std::filesystem::path& tile_dir, std::uint64_t seed) {
  if (!std::filesystem::is_directory(tile_dir)) {
    throw Error(ErrorCode::MissingFile, "not a directory: " + tile_dir.string());
  }
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(tile_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && !name.starts_with('.')) names.push_back(name);
  }
  if (names.empty()) throw Error(ErrorCode::EmptyDirectory, "no tiles in " + tile_dir.string());
  return make_manifest(std::move(names), seed);
}

nlohmann::json manifest_to_json(const Manifest& m) {
  return {{"train", m.train}, {"val", m.val}, {"test", m.test}};
}

}  // namespace roadkit
