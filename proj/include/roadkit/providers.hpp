#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadkit/descriptors.hpp"
#include "roadkit/grading.hpp"
#include "roadkit/raster_io.hpp"

namespace roadkit {

/// Everything a provider may look at for one segment.
struct SegmentContext {
  int segment_id = 0;
  DescriptorVector descriptors;
  DescriptorCategories categories;
  PromptSet prompts;
  std::vector<std::uint8_t> patch_png;
};

class PriorProvider {
 public:
  virtual ~PriorProvider() = default;
  virtual std::string name() const = 0;
  /// Normalized scores; throws Error with Timeout, MalformedResponse,
  /// NonFiniteScore or ProviderUnavailable.
  virtual GradeScores score(const SegmentContext& ctx) = 0;
};

class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string describe(const SegmentContext& ctx) = 0;
};

class HeuristicProvider final : public PriorProvider {
 public:
  std::string name() const override { return "heuristic"; }
  GradeScores score(const SegmentContext& ctx) override { return heuristic_prior(ctx.descriptors); }
};

/// Deterministic offline provider. Without fixed scores it keys on the width
/// word: wide favours High, medium Medium, narrow Low.
class StubProvider final : public PriorProvider {
 public:
  StubProvider() = default;
  explicit StubProvider(GradeScores fixed) : fixed_(fixed) {}
  std::string name() const override { return "stub"; }
  GradeScores score(const SegmentContext& ctx) override;

 private:
  std::optional<GradeScores> fixed_;
};

/// Answers with the rendered sentence for the stub prior's argmax.
class StubTextProvider final : public TextProvider {
 public:
  std::string name() const override { return "stub"; }
  std::string describe(const SegmentContext& ctx) override;
};

struct HttpSettings {
  std::string url;  // http://host:port/path
  int timeout_ms = 5000;
  int retries = 1;  // extra attempts after a timeout or unavailable service
};

class HttpPriorProvider final : public PriorProvider {
 public:
  explicit HttpPriorProvider(HttpSettings settings) : settings_(std::move(settings)) {}
  std::string name() const override { return "http"; }
  GradeScores score(const SegmentContext& ctx) override;

 private:
  HttpSettings settings_;
};

class HttpTextProvider final : public TextProvider {
 public:
  explicit HttpTextProvider(HttpSettings settings) : settings_(std::move(settings)) {}
  std::string name() const override { return "http"; }
  std::string describe(const SegmentContext& ctx) override;

 private:
  HttpSettings settings_;
};

/// Parses a scorer response body; typed errors for malformed or non-finite
/// content.
GradeScores parse_scores_response(const std::string& body);
std::string parse_text_response(const std::string& body);

std::string base64_encode(std::span<const std::uint8_t> bytes);

struct PriorResult {
  GradeScores scores;
  std::string provider;
  bool fallback_used = false;
  std::string fallback_reason;  // error code name when fallback_used
};

/// Queries `provider`; on any provider error uses heuristic_prior instead and
/// records why.
PriorResult prior_with_fallback(PriorProvider& provider, const SegmentContext& ctx);

/// Runs prior_with_fallback over all segments with at most `max_in_flight`
/// concurrent calls. Results are in input order.
std::vector<PriorResult> score_segments(PriorProvider& provider, std::span<const SegmentContext> contexts,
                                        int max_in_flight = 4);

/// PNG bytes of the segment's bounding box plus `margin` pixels, clamped to
/// the image.
std::vector<std::uint8_t> segment_patch(const RgbImage& image, const Segment& seg, int margin = 32);

}  // namespace roadkit
