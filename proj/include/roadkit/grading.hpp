#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "roadkit/descriptors.hpp"
#include "roadkit/raster.hpp"
#include "roadkit/skeleton.hpp"

namespace roadkit {

/// Per-grade scores in High, Medium, Low order.
struct GradeScores {
  std::array<double, 3> values{};

  double& operator[](Grade g) noexcept { return values[grade_index(g)]; }
  double operator[](Grade g) const noexcept { return values[grade_index(g)]; }
  double sum() const noexcept { return values[0] + values[1] + values[2]; }

  friend bool operator==(const GradeScores&, const GradeScores&) = default;
};

/// Throws NonFiniteScore for NaN/inf, MalformedResponse for negative entries
/// or an all-zero vector.
GradeScores normalize_scores(const GradeScores& scores);

/// First maximum in High > Medium > Low order.
Grade argmax(const GradeScores& scores) noexcept;

struct PromptSet {
  std::string description;
  std::array<std::string, 3> queries;  // High, Medium, Low

  const std::string& query(Grade g) const noexcept { return queries[grade_index(g)]; }
};

PromptSet build_prompt(const DescriptorCategories& categories);

/// Offline ordinal-logistic prior on width, length and straightness.
GradeScores heuristic_prior(const DescriptorVector& v);

Grade parse_grade_text(std::string_view text);
std::optional<Grade> try_parse_grade_text(std::string_view text) noexcept;
/// "This is a {High|Medium|Low} Grade road."
std::string render_grade_text(Grade g);

struct FusionConfig {
  double geom = 0.3;
  double vlm = 0.5;
  double lang = 0.2;

  void validate() const;
};

/// Weighted score sum before the argmax. Without a language grade the other
/// two weights are renormalized.
GradeScores fused_scores(const GradeScores& geom, const GradeScores& vlm, std::optional<Grade> lang,
                         const FusionConfig& cfg);
Grade fuse(const GradeScores& geom, const GradeScores& vlm, std::optional<Grade> lang, const FusionConfig& cfg);

/// Assigns each road pixel the grade of its nearest graded skeleton pixel in
/// the same mask component (global nearest when the component has none).
/// `grades` is indexed like graph.edges.
GradeMask render_grade_mask(const SkeletonGraph& graph, std::span<const std::optional<Grade>> grades,
                            const BinaryMask& mask);

/// Skeleton pixels with the grade they carry during rendering: polyline and
/// node pixels, highest grade where segments share a pixel.
Grid<int> graded_skeleton(const SkeletonGraph& graph, std::span<const std::optional<Grade>> grades, int width,
                          int height);

}  // namespace roadkit
