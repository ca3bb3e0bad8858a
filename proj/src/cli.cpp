#include "roadkit/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "roadkit/dataset_tools.hpp"
#include "roadkit/metrics.hpp"
#include "roadkit/pipeline.hpp"

namespace roadkit {
namespace {

std::string env_name(const std::string& flag) {
  std::string out = "ROADKIT_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

template <class T>
CLI::Option* shared(CLI::App& app, const std::string& flag, T& value, const std::string& help) {
  return app.add_option("--" + flag, value, help)->envname(env_name(flag))->capture_default_str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidThresholds:
    case ErrorCode::UnknownSubcommand:
    case ErrorCode::AllWeightsZero:
      return true;
    default:
      return false;
  }
}

struct Paths {
  std::string input;
  std::string output;
  std::string mask;
  std::string image;
  std::string graph;
  std::string descriptors;
  std::string grades;
  std::string extra_output;
  std::string pred;
  std::string gt;
  std::string csv;
  std::string width = "auto";
  std::string size;
  bool include_background = false;
  bool no_prune = false;
};

std::pair<int, int> parse_size(const std::string& text) {
  int w = 0, h = 0;
  char sep = 0;
  std::istringstream ss(text);
  if (!(ss >> w >> sep >> h) || (sep != 'x' && sep != 'X') || w < 1 || h < 1) {
    throw Error(ErrorCode::ConfigInvalid, "size: expected WxH, got \"" + text + "\"");
  }
  return {w, h};
}

RgbImage imagery_for(const Paths& p, const BinaryMask* mask, const SkeletonGraph& graph) {
  if (!p.image.empty()) return load_rgb(p.image);
  if (mask) return mask_to_rgb(*mask);
  return RgbImage(std::max(1, graph.width), std::max(1, graph.height));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Road network reconstruction, description and hierarchical grading"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key=value configuration file (keys are long flag names)");
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  PipelineConfig cfg;
  std::string log_level = "info";
  std::vector<int> backtrack{10, 15, 20};

  const std::string shared_group = "Shared settings";
  auto group = [&](CLI::Option* o) { return o->group(shared_group); };
  group(shared(app, "log-level", log_level, "trace|debug|info|warn|error|off"));
  group(shared(app, "resolution", cfg.resolution_m, "Ground resolution in meters per pixel"));
  group(shared(app, "min-spur", cfg.min_spur_px, "Drop skeleton spurs shorter than this (pixels, 0 keeps all)"));
  group(shared(app, "tile-size", cfg.tile_size, "Tile edge for large inputs (pixels)"));
  group(shared(app, "jobs", cfg.jobs, "Tiles processed in parallel"));
  group(shared(app, "seed", cfg.seed, "Seed for the manifest split"));
  group(shared(app, "backtrack", backtrack, "Backtracking lengths, e.g. 10,15,20"))->delimiter(',')->expected(3);
  group(shared(app, "max-angle-dev", cfg.arr.max_angle_dev_deg, "Admissible angular deviation (degrees)"));
  group(shared(app, "arr-angle-weight", cfg.arr.angle_weight, "Matching-degree angular weight"));
  group(shared(app, "arr-distance-weight", cfg.arr.distance_weight, "Matching-degree distance weight"));
  group(shared(app, "max-radius", cfg.arr.max_search_radius, "Endpoint search radius (pixels)"));
  group(shared(app, "arr-passes", cfg.arr.passes, "Reconstruction passes"));
  group(shared(app, "length-medium", cfg.thresholds.length_medium_m, "Length cut short|medium (m)"));
  group(shared(app, "length-long", cfg.thresholds.length_long_m, "Length cut medium|long (m)"));
  group(shared(app, "width-medium", cfg.thresholds.width_medium_m, "Width cut narrow|medium (m)"));
  group(shared(app, "width-wide", cfg.thresholds.width_wide_m, "Width cut medium|wide (m)"));
  group(shared(app, "straight-min", cfg.thresholds.straight_min, "Straightness for 'straight'"));
  group(shared(app, "dense-min", cfg.thresholds.dense_min, "Density for 'dense'"));
  group(shared(app, "density-radius", cfg.descriptor.density_radius_px, "Density disc radius (pixels)"));
  group(shared(app, "curvature-step", cfg.descriptor.curvature_step_px, "Curvature resampling step (pixels)"));
  group(shared(app, "lane-width", cfg.descriptor.lane_width_m, "Lane width for the lane-count proxy (m)"));
  group(app.add_flag("--extra-descriptors", cfg.descriptor.extra_descriptors,
                     "Also compute orientation variability and lane count")
            ->envname(env_name("extra-descriptors")));
  group(shared(app, "w-geom", cfg.fusion.geom, "Fusion weight of the geometric prior"));
  group(shared(app, "w-vlm", cfg.fusion.vlm, "Fusion weight of the provider prior"));
  group(shared(app, "w-lang", cfg.fusion.lang, "Fusion weight of the parsed text grade"));
  group(shared(app, "provider", cfg.provider.kind, "heuristic|stub|http"));
  group(shared(app, "provider-url", cfg.provider.http.url, "Remote scorer URL"));
  group(shared(app, "provider-timeout-ms", cfg.provider.http.timeout_ms, "Remote scorer timeout"));
  group(shared(app, "provider-retries", cfg.provider.http.retries, "Retries after timeout/unavailable"));
  group(shared(app, "text-provider", cfg.provider.text_kind, "none|stub|http"));
  group(shared(app, "text-provider-url", cfg.provider.text_http.url, "Text provider URL"));
  group(shared(app, "max-in-flight", cfg.provider.max_in_flight, "Concurrent provider requests"));

  Paths p;
  auto existing = [](CLI::Option* o) { return o->check(CLI::ExistingFile); };

  auto* skel_cmd = app.add_subcommand("skeletonize", "Binary road mask -> one-pixel skeleton raster");
  existing(skel_cmd->add_option("-i,--input", p.input, "Road mask")->required());
  skel_cmd->add_option("-o,--output", p.output, "Skeleton raster")->required();

  auto* rec_cmd = app.add_subcommand("reconstruct", "Bridge skeleton gaps between matching endpoints");
  existing(rec_cmd->add_option("-i,--input", p.input, "Skeleton raster")->required());
  rec_cmd->add_option("-o,--output", p.output, "Reconstructed skeleton raster")->required();
  existing(rec_cmd->add_option("--mask", p.mask, "Road mask to widen under bridges"));
  rec_cmd->add_option("--mask-output", p.extra_output, "Road mask with bridge corridors");

  auto* desc_cmd = app.add_subcommand("describe", "Skeleton + mask -> segment graph and descriptor CSV");
  existing(desc_cmd->add_option("-i,--input", p.input, "Skeleton raster")->required());
  existing(desc_cmd->add_option("--mask", p.mask, "Road mask")->required());
  desc_cmd->add_option("--graph-output", p.graph, "Graph JSON")->required();
  desc_cmd->add_option("-o,--output", p.output, "Descriptor CSV")->required();

  auto* grade_cmd = app.add_subcommand("grade", "Graph + descriptors -> per-segment grades JSON");
  existing(grade_cmd->add_option("--graph", p.graph, "Graph JSON")->required());
  existing(grade_cmd->add_option("--descriptors", p.descriptors, "Descriptor CSV")->required());
  existing(grade_cmd->add_option("--image", p.image, "RGB imagery for provider patches"));
  existing(grade_cmd->add_option("--mask", p.mask, "Road mask used for patches when no image is given"));
  grade_cmd->add_option("-o,--output", p.output, "Grades JSON")->required();

  auto* render_cmd = app.add_subcommand("render", "Graph + grades + mask -> grade mask raster");
  existing(render_cmd->add_option("--graph", p.graph, "Graph JSON")->required());
  existing(render_cmd->add_option("--grades", p.grades, "Grades JSON")->required());
  existing(render_cmd->add_option("--mask", p.mask, "Road mask")->required());
  render_cmd->add_option("-o,--output", p.output, "Grade mask PNG")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Pixel and segment metrics of a grade mask");
  existing(eval_cmd->add_option("--pred", p.pred, "Predicted grade mask")->required());
  existing(eval_cmd->add_option("--gt", p.gt, "Ground-truth grade mask")->required());
  eval_cmd->add_flag("--include-background", p.include_background, "Count every pixel, not only gt road");
  eval_cmd->add_option("-o,--output", p.output, "Report JSON (stdout when omitted)");
  eval_cmd->add_option("--csv", p.csv, "Also write a CSV summary");

  auto* buf_cmd = app.add_subcommand("buffer", "Centerline JSON -> buffered road mask");
  existing(buf_cmd->add_option("-i,--input", p.input, "Centerline JSON")->required());
  buf_cmd->add_option("--size", p.size, "Raster size WxH")->required();
  buf_cmd->add_option("--width", p.width, "auto (catalog fit) or a width in meters")->capture_default_str();
  buf_cmd->add_option("-o,--output", p.output, "Road mask")->required();
  buf_cmd->add_option("--grade-output", p.extra_output, "Grade mask PNG");

  auto* man_cmd = app.add_subcommand("manifest", "Seeded train/val/test split of a tile directory");
  man_cmd->add_option("-i,--input", p.input, "Tile directory")->required()->check(CLI::ExistingDirectory);
  man_cmd->add_option("-o,--output", p.output, "Manifest JSON (stdout when omitted)");

  auto* pipe_cmd = app.add_subcommand("pipeline", "skeletonize -> reconstruct -> describe -> grade -> render");
  existing(pipe_cmd->add_option("-i,--input", p.input, "Road mask")->required());
  pipe_cmd->add_option("-o,--output", p.output, "Output directory")->required();
  existing(pipe_cmd->add_option("--image", p.image, "RGB imagery for provider patches"));

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  auto logger = spdlog::get("roadkit");
  if (!logger) logger = spdlog::stderr_color_mt("roadkit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  std::copy(backtrack.begin(), backtrack.end(), cfg.arr.backtrack_lengths.begin());
  cfg.input = p.input;
  cfg.output = p.output;
  cfg.image = p.image;
  cfg.descriptor.resolution_m = cfg.resolution_m;

  try {
    cfg.validate_settings();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*skel_cmd) {
      const BinaryMask mask = load_mask(p.input, cfg.resolution_m);
      save_mask(extract_skeleton(mask, cfg.min_spur_px), p.output);
    } else if (*rec_cmd) {
      const SkeletonMask skel = load_mask(p.input, cfg.resolution_m);
      const Reconstruction rec = reconstruct_detailed(skel, cfg.arr);
      save_mask(rec.skeleton, p.output);
      if (!p.extra_output.empty()) {
        if (p.mask.empty()) throw Error(ErrorCode::ConfigInvalid, "mask-output: requires --mask");
        save_mask(fill_bridges(load_mask(p.mask, cfg.resolution_m), rec.bridges), p.extra_output);
      }
      spdlog::info("{} bridges", rec.bridges.size());
    } else if (*desc_cmd) {
      const SkeletonMask skel = load_mask(p.input, cfg.resolution_m);
      const BinaryMask mask = load_mask(p.mask, cfg.resolution_m);
      if (!mask.same_shape(skel)) throw Error(ErrorCode::ShapeMismatch, "skeleton and mask differ in size");
      const SkeletonGraph graph = build_graph(skel);
      const auto rows = describe_segments(graph, mask, skel, cfg.descriptor);
      write_file(p.graph, graph_to_json(graph).dump(2) + "\n");
      std::ostringstream csv;
      write_descriptor_csv(csv, rows, cfg.thresholds);
      write_file(p.output, csv.str());
    } else if (*grade_cmd) {
      const SkeletonGraph graph = graph_from_json(read_json(p.graph));
      std::istringstream csv(read_file(p.descriptors));
      std::vector<DescriptorVector> rows = read_descriptor_csv(csv);
      std::vector<DescriptorVector> ordered;
      for (const Segment& seg : graph.edges) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.segment_id == seg.id; });
        if (it == rows.end()) throw Error(ErrorCode::UngradedSegment, fmt::format("no descriptors for segment {}", seg.id));
        ordered.push_back(*it);
      }
      std::optional<BinaryMask> mask;
      if (!p.mask.empty()) mask = load_mask(p.mask, cfg.resolution_m);
      const RgbImage imagery = imagery_for(p, mask ? &*mask : nullptr, graph);
      auto prior = make_prior_provider(cfg.provider);
      auto text = make_text_provider(cfg.provider);
      const auto gradings = grade_segments(graph, ordered, imagery, cfg, *prior, text.get());
      write_file(p.output, nlohmann::json{{"segments", gradings_to_json(gradings)}}.dump(2) + "\n");
    } else if (*render_cmd) {
      const SkeletonGraph graph = graph_from_json(read_json(p.graph));
      const auto grades = grades_from_json(read_json(p.grades), graph);
      const BinaryMask mask = load_mask(p.mask, cfg.resolution_m);
      save_grade_mask(render_grade_mask(graph, grades, mask), Palette{}, p.output);
    } else if (*eval_cmd) {
      const GradeMask pred = load_grade_mask(p.pred);
      const GradeMask gt = load_grade_mask(p.gt);
      const ConfusionMatrix cm = pixel_confusion(pred, gt, p.include_background);
      const MetricReport report = pixel_metrics(cm);
      const SegmentAccuracy seg = segment_accuracy(pred, gt);
      const std::string json = report_to_json(report, seg, p.include_background).dump(2) + "\n";
      if (p.output.empty()) {
        std::cout << json;
      } else {
        write_file(p.output, json);
      }
      if (!p.csv.empty()) write_file(p.csv, report_to_csv(report, seg));
    } else if (*buf_cmd) {
      const auto [w, h] = parse_size(p.size);
      const CenterlineFile file = load_centerlines(p.input);
      BufferOptions opts;
      if (p.width != "auto") {
        try {
          std::size_t used = 0;
          opts.fixed_width_m = std::stod(p.width, &used);
          if (used != p.width.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          std::cerr << "error: width: expected auto or a number of meters, got \"" << p.width << "\"\n";
          return 1;
        }
      }
      save_mask(rasterize_centerlines(file, w, h, opts), p.output);
      if (!p.extra_output.empty()) save_grade_mask(rasterize_grade_mask(file, w, h, opts), Palette{}, p.extra_output);
    } else if (*man_cmd) {
      const std::string json = manifest_to_json(make_manifest(std::filesystem::path(p.input), cfg.seed)).dump(2) + "\n";
      if (p.output.empty()) {
        std::cout << json;
      } else {
        write_file(p.output, json);
      }
    } else if (*pipe_cmd) {
      run_pipeline(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace roadkit
