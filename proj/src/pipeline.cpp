#include "roadkit/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace roadkit {
namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + msg);
}

void check_http(const HttpSettings& http, const std::string& prefix) {
  if (http.url.empty()) invalid(prefix + "url", "required for the http provider");
  if (http.url.find("://") == std::string::npos) invalid(prefix + "url", "must look like http://host:port/path");
  if (http.timeout_ms < 1) invalid(prefix + "timeout-ms", "must be >= 1");
  if (http.retries < 0) invalid(prefix + "retries", "must be >= 0");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

RgbImage crop_rgb(const RgbImage& image, int x0, int y0, int width, int height) {
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out(x, y) = image.value_or(x0 + x, y0 + y, Rgb{});
  }
  return out;
}

nlohmann::json scores_json(const GradeScores& s) {
  return {{"high", s[Grade::High]}, {"medium", s[Grade::Medium]}, {"low", s[Grade::Low]}};
}

}  // namespace

void PipelineConfig::validate() const {
  if (input.empty()) invalid("input", "required");
  if (!std::filesystem::is_regular_file(input)) invalid("input", "no such file: " + input.string());
  if (output.empty()) invalid("output", "required");
  if (!image.empty() && !std::filesystem::is_regular_file(image)) invalid("image", "no such file: " + image.string());
  validate_settings();
}

void PipelineConfig::validate_settings() const {
  if (!std::isfinite(resolution_m) || resolution_m <= 0.0) invalid("resolution", "must be > 0");
  if (min_spur_px < 0) invalid("min-spur", "must be >= 0");
  if (tile_size < 1) invalid("tile-size", "must be >= 1");
  if (jobs < 1) invalid("jobs", "must be >= 1");
  if (descriptor.density_radius_px < 1) invalid("density-radius", "must be >= 1");
  if (!(descriptor.curvature_step_px > 0.0)) invalid("curvature-step", "must be > 0");
  if (!(descriptor.lane_width_m > 0.0)) invalid("lane-width", "must be > 0");
  if (provider.kind != "heuristic" && provider.kind != "stub" && provider.kind != "http") {
    invalid("provider", "must be heuristic, stub or http");
  }
  if (provider.text_kind != "none" && provider.text_kind != "stub" && provider.text_kind != "http") {
    invalid("text-provider", "must be none, stub or http");
  }
  if (provider.kind == "http") check_http(provider.http, "provider-");
  if (provider.text_kind == "http") check_http(provider.text_http, "text-provider-");
  if (provider.max_in_flight < 1) invalid("max-in-flight", "must be >= 1");
  arr.validate();
  thresholds.validate();
  fusion.validate();
}

std::unique_ptr<PriorProvider> make_prior_provider(const ProviderSettings& s) {
  if (s.kind == "stub") return std::make_unique<StubProvider>();
  if (s.kind == "http") return std::make_unique<HttpPriorProvider>(s.http);
  return std::make_unique<HeuristicProvider>();
}

std::unique_ptr<TextProvider> make_text_provider(const ProviderSettings& s) {
  if (s.text_kind == "stub") return std::make_unique<StubTextProvider>();
  if (s.text_kind == "http") return std::make_unique<HttpTextProvider>(s.text_http);
  return nullptr;
}

SkeletonMask extract_skeleton(const BinaryMask& mask, int min_spur_px) {
  SkeletonMask skel = skeletonize(mask);
  if (min_spur_px > 0) skel = prune_spurs(skel, min_spur_px);
  return skel;
}

std::vector<SegmentGrading> grade_segments(const SkeletonGraph& graph, std::span<const DescriptorVector> descriptors,
                                           const RgbImage& imagery, const PipelineConfig& config,
                                           PriorProvider& prior, TextProvider* text) {
  if (descriptors.size() != graph.edges.size()) {
    throw Error(ErrorCode::UngradedSegment, fmt::format("{} segments but {} descriptor rows", graph.edges.size(),
                                                        descriptors.size()));
  }
  std::vector<SegmentContext> contexts(graph.edges.size());
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    SegmentContext& ctx = contexts[i];
    ctx.segment_id = graph.edges[i].id;
    ctx.descriptors = descriptors[i];
    ctx.categories = discretize(descriptors[i], config.thresholds);
    ctx.prompts = build_prompt(ctx.categories);
    if (config.provider.kind == "http" || config.provider.text_kind == "http") {
      ctx.patch_png = segment_patch(imagery, graph.edges[i]);
    }
  }
  const std::vector<PriorResult> priors = score_segments(prior, contexts, config.provider.max_in_flight);

  std::vector<SegmentGrading> out(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    SegmentGrading& g = out[i];
    g.segment_id = contexts[i].segment_id;
    g.categories = contexts[i].categories;
    g.description = contexts[i].prompts.description;
    g.geom = heuristic_prior(contexts[i].descriptors);
    g.prior = priors[i];
    if (text) {
      try {
        g.text = text->describe(contexts[i]);
        g.text_grade = try_parse_grade_text(*g.text);
        if (!g.text_grade) g.text_error = std::string(to_string(ErrorCode::NoGradeFound));
      } catch (const Error& e) {
        g.text_error = std::string(to_string(e.code()));
        spdlog::warn("segment {}: text provider failed ({}), language term omitted", g.segment_id, e.what());
      }
    }
    g.fused = fused_scores(g.geom, g.prior.scores, g.text_grade, config.fusion);
    g.grade = argmax(g.fused);
  }
  return out;
}

nlohmann::json gradings_to_json(std::span<const SegmentGrading> gradings) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SegmentGrading& g : gradings) {
    arr.push_back({{"segment_id", g.segment_id},
                   {"categories",
                    {{"length", to_string(g.categories.length)},
                     {"width", to_string(g.categories.width)},
                     {"shape", to_string(g.categories.shape)},
                     {"context", to_string(g.categories.context)}}},
                   {"description", g.description},
                   {"geom_scores", scores_json(g.geom)},
                   {"provider", g.prior.provider},
                   {"prior_scores", scores_json(g.prior.scores)},
                   {"fallback_used", g.prior.fallback_used},
                   {"fallback_reason", g.prior.fallback_reason},
                   {"text", g.text ? nlohmann::json(*g.text) : nlohmann::json(nullptr)},
                   {"text_grade", g.text_grade ? nlohmann::json(grade_name(*g.text_grade)) : nlohmann::json(nullptr)},
                   {"text_error", g.text_error},
                   {"fused_scores", scores_json(g.fused)},
                   {"grade", grade_name(g.grade)}});
  }
  return arr;
}

std::vector<std::optional<Grade>> grades_from_json(const nlohmann::json& json, const SkeletonGraph& graph) {
  const nlohmann::json& list = json.is_object() && json.contains("segments") ? json["segments"] : json;
  if (!list.is_array()) throw Error(ErrorCode::ParseError, "grades JSON must be an array of segments");
  std::vector<std::optional<Grade>> out(graph.edges.size());
  for (const auto& item : list) {
    if (!item.is_object() || !item.contains("segment_id") || !item.contains("grade") ||
        !item["segment_id"].is_number_integer() || !item["grade"].is_string()) {
      throw Error(ErrorCode::ParseError, "grade entry needs integer segment_id and string grade");
    }
    const int id = item["segment_id"].get<int>();
    const auto g = grade_from_name(item["grade"].get<std::string>());
    if (!g) throw Error(ErrorCode::InvalidGrade, "segment " + std::to_string(id) + " has an unknown grade");
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
      if (graph.edges[i].id == id) out[i] = g;
    }
  }
  return out;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  return {{"input", c.input.string()},
          {"image", c.image.string()},
          {"resolution_m", c.resolution_m},
          {"min_spur_px", c.min_spur_px},
          {"tile_size", c.tile_size},
          {"seed", c.seed},
          {"arr",
           {{"backtrack", c.arr.backtrack_lengths},
            {"max_angle_dev_deg", c.arr.max_angle_dev_deg},
            {"angle_weight", c.arr.angle_weight},
            {"distance_weight", c.arr.distance_weight},
            {"max_search_radius", c.arr.max_search_radius},
            {"passes", c.arr.passes}}},
          {"thresholds",
           {{"length_medium_m", c.thresholds.length_medium_m},
            {"length_long_m", c.thresholds.length_long_m},
            {"width_medium_m", c.thresholds.width_medium_m},
            {"width_wide_m", c.thresholds.width_wide_m},
            {"straight_min", c.thresholds.straight_min},
            {"dense_min", c.thresholds.dense_min}}},
          {"descriptors",
           {{"density_radius_px", c.descriptor.density_radius_px},
            {"curvature_step_px", c.descriptor.curvature_step_px},
            {"extra_descriptors", c.descriptor.extra_descriptors}}},
          {"fusion", {{"geom", c.fusion.geom}, {"vlm", c.fusion.vlm}, {"lang", c.fusion.lang}}},
          {"provider",
           {{"kind", c.provider.kind},
            {"url", c.provider.http.url},
            {"timeout_ms", c.provider.http.timeout_ms},
            {"retries", c.provider.http.retries},
            {"text_kind", c.provider.text_kind},
            {"text_url", c.provider.text_http.url},
            {"max_in_flight", c.provider.max_in_flight}}}};
}

TileOutcome run_tile(const BinaryMask& input, const RgbImage& imagery, const std::filesystem::path& out_dir,
                     const PipelineConfig& config, const std::string& name) {
  BinaryMask mask = input;
  mask.set_resolution_m(config.resolution_m);
  std::filesystem::create_directories(out_dir);

  const SkeletonMask thin = extract_skeleton(mask, config.min_spur_px);
  const Reconstruction rec = reconstruct_detailed(thin, config.arr);
  const BinaryMask road = fill_bridges(mask, rec.bridges);
  const SkeletonGraph graph = build_graph(rec.skeleton);

  DescriptorOptions dopts = config.descriptor;
  dopts.resolution_m = config.resolution_m;
  const std::vector<DescriptorVector> descriptors = describe_segments(graph, road, rec.skeleton, dopts);

  auto prior = make_prior_provider(config.provider);
  auto text = make_text_provider(config.provider);
  const std::vector<SegmentGrading> gradings =
      grade_segments(graph, descriptors, imagery, config, *prior, text.get());

  std::vector<std::optional<Grade>> grades;
  grades.reserve(gradings.size());
  for (const SegmentGrading& g : gradings) grades.emplace_back(g.grade);
  const GradeMask grade_mask = render_grade_mask(graph, grades, road);

  save_mask(rec.skeleton, out_dir / "skeleton.png");
  write_text(out_dir / "graph.json", graph_to_json(graph).dump(2) + "\n");
  std::ostringstream csv;
  write_descriptor_csv(csv, descriptors, config.thresholds);
  write_text(out_dir / "descriptors.csv", csv.str());
  save_grade_mask(grade_mask, Palette{}, out_dir / "grade_mask.png");

  TileOutcome outcome;
  outcome.name = name;
  outcome.segments = static_cast<int>(graph.edges.size());
  outcome.bridges = static_cast<int>(rec.bridges.size());
  nlohmann::json bridges = nlohmann::json::array();
  for (const Bridge& b : rec.bridges) {
    bridges.push_back({{"a", {b.a.x, b.a.y}}, {"b", {b.b.x, b.b.y}}, {"matching_degree", b.degree}});
  }
  for (const SegmentGrading& g : gradings) outcome.fallbacks += g.prior.fallback_used ? 1 : 0;
  const nlohmann::json log = {{"tile", name},
                              {"width", mask.width()},
                              {"height", mask.height()},
                              {"config", config_to_json(config)},
                              {"skeleton_pixels", rec.skeleton.count()},
                              {"bridges", bridges},
                              {"segment_count", outcome.segments},
                              {"fallback_count", outcome.fallbacks},
                              {"segments", gradings_to_json(gradings)}};
  write_text(out_dir / "run_log.json", log.dump(2) + "\n");
  spdlog::info("{}: {} segments, {} bridges, {} fallbacks", name, outcome.segments, outcome.bridges,
               outcome.fallbacks);
  return outcome;
}

std::vector<TileOutcome> run_pipeline(const PipelineConfig& config) {
  config.validate();
  const BinaryMask mask = load_mask(config.input, config.resolution_m);
  RgbImage imagery;
  if (!config.image.empty()) {
    imagery = load_rgb(config.image);
    if (imagery.width() != mask.width() || imagery.height() != mask.height()) {
      throw Error(ErrorCode::ShapeMismatch, fmt::format("image is {}x{} but mask is {}x{}", imagery.width(),
                                                        imagery.height(), mask.width(), mask.height()));
    }
  } else {
    imagery = mask_to_rgb(mask);
  }
  std::filesystem::create_directories(config.output);

  if (mask.width() <= config.tile_size && mask.height() <= config.tile_size) {
    return {run_tile(mask, imagery, config.output, config, config.input.filename().string())};
  }

  const std::vector<TileRegion> regions = tile_regions(mask.width(), mask.height(), config.tile_size);
  const std::vector<BinaryMask> tiles = tile(mask, config.tile_size);
  std::vector<TileOutcome> outcomes(regions.size());
  std::vector<std::exception_ptr> failures(regions.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < regions.size(); i = next++) {
      const TileRegion& r = regions[i];
      const std::string name = fmt::format("tile_r{}_c{}", r.row, r.col);
      try {
        const RgbImage patch = crop_rgb(imagery, r.x0, r.y0, config.tile_size, config.tile_size);
        outcomes[i] = run_tile(tiles[i], patch, config.output / name, config, name);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), regions.size());
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  nlohmann::json tile_list = nlohmann::json::array();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const TileRegion& r = regions[i];
    tile_list.push_back({{"name", outcomes[i].name},
                         {"row", r.row},
                         {"col", r.col},
                         {"x0", r.x0},
                         {"y0", r.y0},
                         {"width", r.width},
                         {"height", r.height},
                         {"segments", outcomes[i].segments},
                         {"bridges", outcomes[i].bridges},
                         {"fallbacks", outcomes[i].fallbacks}});
  }
  const nlohmann::json log = {{"width", mask.width()},
                              {"height", mask.height()},
                              {"tile_size", config.tile_size},
                              {"config", config_to_json(config)},
                              {"tiles", tile_list}};
  write_text(config.output / "run_log.json", log.dump(2) + "\n");
  return outcomes;
}

}  // namespace roadkit
