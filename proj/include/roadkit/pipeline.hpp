#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadkit/arr.hpp"
#include "roadkit/descriptors.hpp"
#include "roadkit/grading.hpp"
#include "roadkit/providers.hpp"
#include "roadkit/raster_io.hpp"
#include "roadkit/skeleton.hpp"

namespace roadkit {

struct ProviderSettings {
  std::string kind = "heuristic";  // heuristic | stub | http
  std::string text_kind = "none";  // none | stub | http
  HttpSettings http;
  HttpSettings text_http;
  int max_in_flight = 4;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path image;  // optional RGB imagery for provider patches
  double resolution_m = BinaryMask::kDefaultResolution;
  int min_spur_px = 5;
  int tile_size = 1024;
  int jobs = 1;
  std::uint64_t seed = 0;
  ArrConfig arr;
  DescriptorThresholds thresholds;
  DescriptorOptions descriptor;
  FusionConfig fusion;
  ProviderSettings provider;

  /// Throws ConfigInvalid naming the field; sub-configs throw their own codes.
  void validate() const;
  /// Everything except the input/output paths.
  void validate_settings() const;
};

std::unique_ptr<PriorProvider> make_prior_provider(const ProviderSettings& settings);
std::unique_ptr<TextProvider> make_text_provider(const ProviderSettings& settings);

/// Thinning followed by spur removal.
SkeletonMask extract_skeleton(const BinaryMask& mask, int min_spur_px);

struct SegmentGrading {
  int segment_id = 0;
  DescriptorCategories categories;
  std::string description;
  GradeScores geom;
  PriorResult prior;
  std::optional<std::string> text;
  std::optional<Grade> text_grade;
  std::string text_error;
  GradeScores fused;
  Grade grade = Grade::Low;
};

/// Prompts, provider priors, optional text channel and fusion for every
/// segment; results follow graph.edges order.
std::vector<SegmentGrading> grade_segments(const SkeletonGraph& graph, std::span<const DescriptorVector> descriptors,
                                           const RgbImage& imagery, const PipelineConfig& config,
                                           PriorProvider& prior, TextProvider* text);

nlohmann::json gradings_to_json(std::span<const SegmentGrading> gradings);
/// Grades by edge index from gradings_to_json output.
std::vector<std::optional<Grade>> grades_from_json(const nlohmann::json& json, const SkeletonGraph& graph);

struct TileOutcome {
  std::string name;
  int segments = 0;
  int bridges = 0;
  int fallbacks = 0;
};

/// Full chain on one raster; writes skeleton.png, graph.json,
/// descriptors.csv, grade_mask.png and run_log.json into `out_dir`.
TileOutcome run_tile(const BinaryMask& mask, const RgbImage& imagery, const std::filesystem::path& out_dir,
                     const PipelineConfig& config, const std::string& name);

/// Tiles inputs larger than tile_size into tile_rR_cC subdirectories and
/// runs them with at most `jobs` in parallel.
std::vector<TileOutcome> run_pipeline(const PipelineConfig& config);

nlohmann::json config_to_json(const PipelineConfig& config);

}  // namespace roadkit
