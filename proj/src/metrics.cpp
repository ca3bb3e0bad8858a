#include "roadkit/metrics.hpp"

#include <fmt/format.h>

#include <array>
#include <numeric>

#include "roadkit/skeleton.hpp"

namespace roadkit {
namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

constexpr std::array<std::string_view, 4> kClassNames{"high", "medium", "low", "background"};

}  // namespace

Ratio Ratio::of(__int128 num, __int128 den) {
  if (den == 0) throw Error(ErrorCode::EmptyMatrix, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

double Ratio::value() const noexcept {
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

Ratio Ratio::operator+(const Ratio& other) const {
  const __int128 g = gcd128(den, other.den);
  return of(num * (other.den / g) + other.num * (den / g), den / g * other.den);
}

ConfusionMatrix::ConfusionMatrix(int k, int scored)
    : classes(k), scored_classes(scored < 0 ? k : scored), counts(static_cast<std::size_t>(k * k), 0) {}

long long ConfusionMatrix::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), 0LL); }

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes != classes) throw Error(ErrorCode::ShapeMismatch, "confusion matrices differ in size");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

ConfusionMatrix pixel_confusion(const GradeMask& pred, const GradeMask& gt, bool include_background) {
  if (!pred.same_shape(gt)) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("prediction is {}x{} but ground truth is {}x{}", pred.width(),
                                                      pred.height(), gt.width(), gt.height()));
  }
  ConfusionMatrix cm(4, 3);
  const auto p = pred.values();
  const auto g = gt.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!include_background && g[i] == Label::Background) continue;
    ++cm.at(confusion_index(g[i]), confusion_index(p[i]));
  }
  return cm;
}

MetricReport pixel_metrics(const ConfusionMatrix& cm) {
  const long long n = cm.total();
  if (n <= 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no samples");
  const int k = cm.classes;
  MetricReport r;
  r.classes.resize(static_cast<std::size_t>(k));
  __int128 trace = 0;
  __int128 chance = 0;
  for (int c = 0; c < k; ++c) {
    ClassMetrics& m = r.classes[static_cast<std::size_t>(c)];
    for (int j = 0; j < k; ++j) {
      m.support += cm.at(c, j);
      m.predicted += cm.at(j, c);
    }
    m.true_positive = cm.at(c, c);
    trace += m.true_positive;
    chance += static_cast<__int128>(m.support) * m.predicted;
    const long long fp = m.predicted - m.true_positive;
    const long long fn = m.support - m.true_positive;
    m.defined = m.support > 0;
    if (m.predicted > 0) m.precision = Ratio::of(m.true_positive, m.predicted);
    if (m.support > 0) m.recall = Ratio::of(m.true_positive, m.support);
    if (m.support + m.predicted > 0) {
      m.iou = Ratio::of(m.true_positive, m.true_positive + fp + fn);
      m.dice = Ratio::of(2 * static_cast<__int128>(m.true_positive), 2 * static_cast<__int128>(m.true_positive) + fp + fn);
      m.f1 = m.dice;
    }
  }
  r.overall_accuracy = Ratio::of(trace, n);
  const __int128 n2 = static_cast<__int128>(n) * n;
  r.kappa = n2 == chance ? Ratio{1, 1} : Ratio::of(static_cast<__int128>(n) * trace - chance, n2 - chance);

  Ratio iou_sum, dice_sum;
  int defined = 0;
  for (int c = 0; c < cm.scored_classes; ++c) {
    const ClassMetrics& m = r.classes[static_cast<std::size_t>(c)];
    if (!m.defined) continue;
    iou_sum = iou_sum + *m.iou;
    dice_sum = dice_sum + *m.dice;
    ++defined;
  }
  if (defined > 0) {
    r.mean_iou = Ratio::of(iou_sum.num, iou_sum.den * defined);
    r.mean_dice = Ratio::of(dice_sum.num, dice_sum.den * defined);
    r.mean_f1 = r.mean_dice;
  }
  return r;
}

namespace {

Grade majority_grade(const std::array<long long, 3>& votes) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (votes[i] > votes[best]) best = i;
  }
  return kGrades[best];
}

}  // namespace

SegmentAccuracy segment_accuracy(const GradeMask& pred, const GradeMask& gt) {
  if (!pred.same_shape(gt)) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("prediction is {}x{} but ground truth is {}x{}", pred.width(),
                                                      pred.height(), gt.width(), gt.height()));
  }
  const ComponentLabels comps = connected_components(road_pixels(pred));
  std::array<ComponentLabels, 3> gt_comps;
  for (Grade g : kGrades) gt_comps[grade_index(g)] = connected_components(gt, to_label(g));

  struct Acc {
    long long n = 0, sx = 0, sy = 0;
    std::array<long long, 3> votes{};
  };
  std::vector<Acc> acc(static_cast<std::size_t>(comps.count) + 1);
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const int c = comps.labels(x, y);
      if (c == 0) continue;
      Acc& a = acc[static_cast<std::size_t>(c)];
      ++a.n;
      a.sx += x;
      a.sy += y;
      ++a.votes[grade_index(*to_grade(pred(x, y)))];
    }
  }

  SegmentAccuracy out;
  long long correct = 0;
  for (int c = 1; c <= comps.count; ++c) {
    const Acc& a = acc[static_cast<std::size_t>(c)];
    SegmentMatch m;
    m.pred_component = c;
    m.pixel_count = a.n;
    m.pred_grade = majority_grade(a.votes);
    // Mean rounded half up, kept in integers.
    m.centroid = {static_cast<int>((2 * a.sx + a.n) / (2 * a.n)), static_cast<int>((2 * a.sy + a.n) / (2 * a.n))};

    Pixel hit{-1, -1};
    if (gt(m.centroid.x, m.centroid.y) != Label::Background) {
      hit = m.centroid;
    } else {
      long long best = kSegmentMatchRadius2 + 1;
      const int r = 10;
      for (int y = m.centroid.y - r; y <= m.centroid.y + r; ++y) {
        for (int x = m.centroid.x - r; x <= m.centroid.x + r; ++x) {
          if (!gt.contains(x, y) || gt(x, y) == Label::Background) continue;
          const long long d2 = squared_distance({x, y}, m.centroid);
          if (d2 < best) {
            best = d2;
            hit = {x, y};
          }
        }
      }
      m.via_fallback = hit.x >= 0;
    }
    if (hit.x >= 0) {
      m.matched = true;
      m.gt_pixel = hit;
      m.gt_grade = to_grade(gt[hit]);
      m.gt_component = gt_comps[grade_index(*m.gt_grade)].labels[hit];
      m.correct = *m.gt_grade == m.pred_grade;
    }
    if (m.correct) ++correct;
    out.matches.push_back(m);
  }
  if (comps.count > 0) out.accuracy = Ratio::of(correct, comps.count);
  return out;
}

namespace {

nlohmann::json opt(const std::optional<Ratio>& r) { return r ? nlohmann::json(r->value()) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json report_to_json(const MetricReport& report, const SegmentAccuracy& seg, bool include_background) {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const ClassMetrics& m = report.classes[c];
    const std::string name = c < kClassNames.size() ? std::string(kClassNames[c]) : std::to_string(c);
    classes[name] = {{"support", m.support},   {"predicted", m.predicted}, {"true_positive", m.true_positive},
                     {"defined", m.defined},   {"precision", opt(m.precision)}, {"recall", opt(m.recall)},
                     {"f1", opt(m.f1)},        {"iou", opt(m.iou)},       {"dice", opt(m.dice)}};
  }
  nlohmann::json matches = nlohmann::json::array();
  for (const SegmentMatch& m : seg.matches) {
    matches.push_back({{"pred_component", m.pred_component},
                       {"pixels", m.pixel_count},
                       {"pred_grade", grade_name(m.pred_grade)},
                       {"centroid", {m.centroid.x, m.centroid.y}},
                       {"matched", m.matched},
                       {"via_fallback", m.via_fallback},
                       {"gt_grade", m.gt_grade ? nlohmann::json(grade_name(*m.gt_grade)) : nlohmann::json(nullptr)},
                       {"gt_component", m.gt_component},
                       {"correct", m.correct}});
  }
  return {{"universe", include_background ? "all_pixels" : "gt_road_pixels"},
          {"overall_accuracy", report.overall_accuracy.value()},
          {"kappa", report.kappa.value()},
          {"mean_iou", opt(report.mean_iou)},
          {"mean_dice", opt(report.mean_dice)},
          {"mean_f1", opt(report.mean_f1)},
          {"segment_accuracy", opt(seg.accuracy)},
          {"classes", classes},
          {"segments", matches}};
}

std::string report_to_csv(const MetricReport& report, const SegmentAccuracy& seg) {
  auto cell = [](const std::optional<Ratio>& r) { return r ? fmt::format("{}", r->value()) : std::string(); };
  std::string out = "class,support,predicted,true_positive,precision,recall,f1,iou,dice\n";
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const ClassMetrics& m = report.classes[c];
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", c < kClassNames.size() ? kClassNames[c] : "?", m.support,
                       m.predicted, m.true_positive, cell(m.precision), cell(m.recall), cell(m.f1), cell(m.iou),
                       cell(m.dice));
  }
  out += fmt::format("overall_accuracy,,,,{},,,,\n", report.overall_accuracy.value());
  out += fmt::format("kappa,,,,{},,,,\n", report.kappa.value());
  out += fmt::format("mean_iou,,,,{},,,,\n", cell(report.mean_iou));
  out += fmt::format("mean_dice,,,,{},,,,\n", cell(report.mean_dice));
  out += fmt::format("segment_accuracy,,,,{},,,,\n", cell(seg.accuracy));
  return out;
}

}  // namespace roadkit
