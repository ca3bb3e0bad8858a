#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadkit/raster.hpp"

namespace roadkit {

/// Reduced nonnegative-denominator fraction; metric values are kept exact.
struct Ratio {
  __int128 num = 0;
  __int128 den = 1;

  static Ratio of(__int128 num, __int128 den);
  double value() const noexcept;
  Ratio operator+(const Ratio& other) const;

  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// counts[gt][pred]. Grade matrices use High, Medium, Low, Background order.
struct ConfusionMatrix {
  int classes = 0;
  int scored_classes = 0;  // leading classes that enter the means
  std::vector<long long> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int k, int scored = -1);

  long long& at(int gt, int pred) { return counts[static_cast<std::size_t>(gt * classes + pred)]; }
  long long at(int gt, int pred) const { return counts[static_cast<std::size_t>(gt * classes + pred)]; }
  long long total() const noexcept;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Index of a label in the grade confusion matrix.
constexpr int confusion_index(Label l) noexcept {
  switch (l) {
    case Label::High: return 0;
    case Label::Medium: return 1;
    case Label::Low: return 2;
    case Label::Background: return 3;
  }
  return 3;
}

/// Counts pixels where gt is road, or every pixel with `include_background`.
ConfusionMatrix pixel_confusion(const GradeMask& pred, const GradeMask& gt, bool include_background = false);

struct ClassMetrics {
  long long support = 0;    // gt pixels of the class
  long long predicted = 0;  // pred pixels of the class
  long long true_positive = 0;
  bool defined = false;     // support > 0
  std::optional<Ratio> precision;
  std::optional<Ratio> recall;
  std::optional<Ratio> f1;
  std::optional<Ratio> iou;
  std::optional<Ratio> dice;
};

struct MetricReport {
  std::vector<ClassMetrics> classes;
  Ratio overall_accuracy;
  Ratio kappa;
  std::optional<Ratio> mean_iou;
  std::optional<Ratio> mean_dice;
  std::optional<Ratio> mean_f1;
};

/// Throws EmptyMatrix when the total is zero.
MetricReport pixel_metrics(const ConfusionMatrix& cm);

struct SegmentMatch {
  int pred_component = 0;
  long long pixel_count = 0;
  Grade pred_grade = Grade::High;
  Pixel centroid;
  bool matched = false;
  bool via_fallback = false;  // matched through the nearest gt road pixel
  Pixel gt_pixel{-1, -1};
  std::optional<Grade> gt_grade;
  int gt_component = 0;  // per-grade component id in the gt mask
  bool correct = false;
};

struct SegmentAccuracy {
  std::optional<Ratio> accuracy;  // undefined without predicted segments
  std::vector<SegmentMatch> matches;
};

/// Maximum squared pixel distance for the nearest-road-pixel fallback.
inline constexpr long long kSegmentMatchRadius2 = 100;

SegmentAccuracy segment_accuracy(const GradeMask& pred, const GradeMask& gt);

nlohmann::json report_to_json(const MetricReport& report, const SegmentAccuracy& seg, bool include_background);
std::string report_to_csv(const MetricReport& report, const SegmentAccuracy& seg);

}  // namespace roadkit
