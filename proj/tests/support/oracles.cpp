#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {
namespace {

int label_index(roadkit::Label l) {
  switch (l) {
    case roadkit::Label::High: return 0;
    case roadkit::Label::Medium: return 1;
    case roadkit::Label::Low: return 2;
    default: return 3;
  }
}

roadkit::Label index_label(int i) {
  switch (i) {
    case 0: return roadkit::Label::High;
    case 1: return roadkit::Label::Medium;
    case 2: return roadkit::Label::Low;
    default: return roadkit::Label::Background;
  }
}

long long d2(Pixel a, Pixel b) {
  const long long dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double angle_between(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

double heading(Pixel from, Pixel to) {
  return std::atan2(static_cast<double>(to.y - from.y), static_cast<double>(to.x - from.x)) * 180.0 /
         std::numbers::pi;
}

bool raster_before(Pixel a, Pixel b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

}  // namespace

roadkit::Grid<long long> brute_edt2(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  roadkit::Grid<long long> out(w, h, 0);
  std::vector<Pixel> background;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) background.push_back({x, y});
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const long long frame = std::min({x + 1, w - x, y + 1, h - y});
      long long best = frame * frame;
      for (Pixel b : background) best = std::min(best, d2({x, y}, b));
      out(x, y) = best;
    }
  }
  return out;
}

std::pair<roadkit::Grid<int>, int> flood_fill(const BinaryMask& mask) {
  roadkit::Grid<int> labels(mask.width(), mask.height(), 0);
  int next = 0;
  std::vector<Pixel> stack;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y) || labels(x, y) != 0) continue;
      ++next;
      labels(x, y) = next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int qx = p.x + dx, qy = p.y + dy;
            if (!mask.test(qx, qy) || labels(qx, qy) != 0) continue;
            labels(qx, qy) = next;
            stack.push_back({qx, qy});
          }
        }
      }
    }
  }
  return {labels, next};
}

int component_count(const BinaryMask& mask) { return flood_fill(mask).second; }

bool has_full_2x2(const BinaryMask& mask) {
  for (int y = 0; y + 1 < mask.height(); ++y) {
    for (int x = 0; x + 1 < mask.width(); ++x) {
      if (mask(x, y) && mask(x + 1, y) && mask(x, y + 1) && mask(x + 1, y + 1)) return true;
    }
  }
  return false;
}

BinaryMask random_blob_mask(std::mt19937_64& rng, int width, int height) {
  BinaryMask mask(width, height);
  std::uniform_int_distribution<int> shapes(1, 5), kind(0, 2), xs(0, width - 1), ys(0, height - 1);
  std::uniform_int_distribution<int> size(2, std::max(3, std::min(width, height) / 3)), radius(1, 4);
  const int n = shapes(rng);
  for (int s = 0; s < n; ++s) {
    const int k = kind(rng);
    if (k == 0) {
      const double ax = xs(rng), ay = ys(rng), bx = xs(rng), by = ys(rng);
      const double r = radius(rng) * 0.75;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double vx = bx - ax, vy = by - ay;
          const double len2 = vx * vx + vy * vy;
          double t = len2 > 0 ? ((x - ax) * vx + (y - ay) * vy) / len2 : 0.0;
          t = std::clamp(t, 0.0, 1.0);
          const double dx = x - (ax + t * vx), dy = y - (ay + t * vy);
          if (dx * dx + dy * dy <= r * r) mask.set(x, y);
        }
      }
    } else if (k == 1) {
      const int x0 = xs(rng), y0 = ys(rng), w = size(rng), h = size(rng);
      for (int y = y0; y < std::min(height, y0 + h); ++y) {
        for (int x = x0; x < std::min(width, x0 + w); ++x) mask.set(x, y);
      }
    } else {
      const int cx = xs(rng), cy = ys(rng), r = size(rng) / 2 + 1;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) mask.set(x, y);
        }
      }
    }
  }
  return mask;
}

std::vector<Pixel> dda_line(Pixel a, Pixel b) {
  const int dx = b.x - a.x, dy = b.y - a.y;
  const int n = std::max(std::abs(dx), std::abs(dy));
  std::vector<Pixel> out;
  auto round_div = [](long long num, long long den) {
    // nearest integer, halves away from zero
    return static_cast<int>(num >= 0 ? (2 * num + den) / (2 * den) : -((-2 * num + den) / (2 * den)));
  };
  for (int i = 0; i <= n; ++i) {
    if (n == 0) {
      out.push_back(a);
      break;
    }
    out.push_back({a.x + round_div(static_cast<long long>(i) * dx, n), a.y + round_div(static_cast<long long>(i) * dy, n)});
  }
  return out;
}

BinaryMask LineFixture::skeleton() const {
  BinaryMask m(width, height);
  for (const auto& line : lines) {
    for (Pixel p : line) m.set(p);
  }
  return m;
}

std::vector<OracleEndpoint> fixture_endpoints(const LineFixture& fx, const roadkit::ArrConfig& cfg) {
  std::vector<OracleEndpoint> out;
  for (int li = 0; li < static_cast<int>(fx.lines.size()); ++li) {
    const auto& line = fx.lines[static_cast<std::size_t>(li)];
    for (int end = 0; end < 2; ++end) {
      std::vector<Pixel> walk(line.begin(), line.end());
      if (end == 1) std::reverse(walk.begin(), walk.end());
      const int steps = static_cast<int>(walk.size()) - 1;
      std::vector<std::pair<double, int>> samples;  // angle, length
      for (int l : cfg.backtrack_lengths) {
        if (l <= steps) samples.emplace_back(heading(walk[0], walk[static_cast<std::size_t>(l)]), l);
      }
      if (samples.empty()) samples.emplace_back(heading(walk[0], walk.back()), steps);
      double total = 0.0;
      for (const auto& s : samples) total += s.second;
      const double ref = samples.front().first;
      double orientation = 0.0;
      for (const auto& [angle, len] : samples) {
        double diff = angle - ref;
        while (diff > 180.0) diff -= 360.0;
        while (diff <= -180.0) diff += 360.0;
        orientation += (ref + diff) * len / total;
      }
      orientation = std::fmod(orientation, 360.0);
      if (orientation < 0) orientation += 360.0;
      out.push_back({walk[0], li, orientation});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const OracleEndpoint& a, const OracleEndpoint& b) { return raster_before(a.position, b.position); });
  return out;
}

std::vector<std::pair<Pixel, Pixel>> brute_pairs(const LineFixture& fx, const roadkit::ArrConfig& cfg) {
  const std::vector<OracleEndpoint> ends = fixture_endpoints(fx, cfg);
  const int n = static_cast<int>(ends.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), inf));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const OracleEndpoint& a = ends[static_cast<std::size_t>(i)];
      const OracleEndpoint& b = ends[static_cast<std::size_t>(j)];
      if (i == j || a.line == b.line) continue;
      const double dist = std::sqrt(static_cast<double>(d2(a.position, b.position)));
      if (dist > cfg.max_search_radius) continue;
      const double outward = a.orientation_deg + 180.0;
      const double orientation_dev = angle_between(b.orientation_deg, outward);
      const double direction_dev = angle_between(heading(a.position, b.position), outward);
      if (orientation_dev >= cfg.max_angle_dev_deg || direction_dev >= cfg.max_angle_dev_deg) continue;
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          orientation_dev * std::numbers::pi / 180.0 * dist * cfg.angle_weight + dist * cfg.distance_weight;
    }
  }
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<std::pair<Pixel, Pixel>> pairs;
  for (bool progress = true; progress;) {
    progress = false;
    std::vector<int> best(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < n; ++j) {
        if (taken[static_cast<std::size_t>(j)]) continue;
        const double c = cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (c == inf) continue;
        const int& bi = best[static_cast<std::size_t>(i)];
        if (bi < 0 || c < cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(bi)]) {
          best[static_cast<std::size_t>(i)] = j;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      const int j = best[static_cast<std::size_t>(i)];
      if (j > i && best[static_cast<std::size_t>(j)] == i) {
        pairs.emplace_back(ends[static_cast<std::size_t>(i)].position, ends[static_cast<std::size_t>(j)].position);
        taken[static_cast<std::size_t>(i)] = taken[static_cast<std::size_t>(j)] = true;
        progress = true;
      }
    }
  }
  for (auto& pr : pairs) {
    if (raster_before(pr.second, pr.first)) std::swap(pr.first, pr.second);
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return raster_before(a.first, b.first) || (a.first == b.first && raster_before(a.second, b.second));
  });
  return pairs;
}

namespace {

bool separated(const std::vector<std::vector<Pixel>>& lines, const std::vector<Pixel>& cand, int gap) {
  for (const auto& line : lines) {
    for (Pixel p : line) {
      for (Pixel q : cand) {
        if (std::abs(p.x - q.x) < gap && std::abs(p.y - q.y) < gap) return false;
      }
    }
  }
  return true;
}

}  // namespace

LineFixture random_line_fixture(std::mt19937_64& rng, bool broken_line) {
  LineFixture fx;
  std::uniform_int_distribution<int> coord(3, 124);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  if (broken_line) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Pixel a{coord(rng), coord(rng)};
      const double t = angle(rng);
      const int len = std::uniform_int_distribution<int>(80, 115)(rng);
      const Pixel b{a.x + static_cast<int>(std::lround(len * std::cos(t))),
                    a.y + static_cast<int>(std::lround(len * std::sin(t)))};
      if (b.x < 3 || b.x > 124 || b.y < 3 || b.y > 124) continue;
      const std::vector<Pixel> full = dda_line(a, b);
      const int pieces = std::uniform_int_distribution<int>(2, 3)(rng);
      std::vector<std::vector<Pixel>> lines;
      std::size_t pos = 0;
      bool ok = true;
      for (int k = 0; k < pieces && ok; ++k) {
        const std::size_t piece = static_cast<std::size_t>(std::uniform_int_distribution<int>(25, 32)(rng));
        if (pos + piece > full.size()) {
          ok = k >= 2;
          break;
        }
        lines.emplace_back(full.begin() + static_cast<std::ptrdiff_t>(pos),
                           full.begin() + static_cast<std::ptrdiff_t>(pos + piece));
        pos += piece + static_cast<std::size_t>(std::uniform_int_distribution<int>(4, 14)(rng));
      }
      if (!ok || lines.size() < 2) continue;
      fx.lines = std::move(lines);
      break;
    }
  }
  const int extra = broken_line ? std::uniform_int_distribution<int>(0, 1)(rng)
                                : std::uniform_int_distribution<int>(2, 4)(rng);
  int placed = 0;
  for (int attempt = 0; attempt < 5000 && placed < extra && fx.lines.size() < 4; ++attempt) {
    const Pixel a{coord(rng), coord(rng)};
    const double t = angle(rng);
    const int len = std::uniform_int_distribution<int>(25, 50)(rng);
    const Pixel b{a.x + static_cast<int>(std::lround(len * std::cos(t))),
                  a.y + static_cast<int>(std::lround(len * std::sin(t)))};
    if (b.x < 3 || b.x > 124 || b.y < 3 || b.y > 124) continue;
    std::vector<Pixel> line = dda_line(a, b);
    if (!separated(fx.lines, line, 3)) continue;
    fx.lines.push_back(std::move(line));
    ++placed;
  }
  return fx;
}

GradeMask brute_render(const roadkit::Grid<int>& sites, const BinaryMask& mask) {
  const auto [labels, count] = flood_fill(mask);
  GradeMask out(mask.width(), mask.height(), roadkit::Label::Background);
  std::vector<Pixel> all;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (sites(x, y) >= 0) all.push_back({x, y});
    }
  }
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      const int c = labels(x, y);
      bool own = false;
      for (Pixel s : all) own = own || (mask.test(s) && labels[s] == c);
      std::optional<Pixel> best;
      for (Pixel s : all) {
        if (own && !(mask.test(s) && labels[s] == c)) continue;
        if (!best || d2({x, y}, s) < d2({x, y}, *best)) best = s;
      }
      out(x, y) = index_label(sites[*best]);
    }
  }
  return out;
}

roadkit::ConfusionMatrix reference_confusion(const GradeMask& pred, const GradeMask& gt, bool include_background) {
  roadkit::ConfusionMatrix cm(4, 3);
  for (int g = 0; g < 4; ++g) {
    for (int p = 0; p < 4; ++p) {
      long long n = 0;
      for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
          if (!include_background && gt(x, y) == roadkit::Label::Background) continue;
          if (label_index(gt(x, y)) == g && label_index(pred(x, y)) == p) ++n;
        }
      }
      cm.at(g, p) = n;
    }
  }
  return cm;
}

ReferenceMetrics reference_metrics(const roadkit::ConfusionMatrix& cm) {
  const int k = cm.classes;
  ReferenceMetrics r;
  long long n = 0, trace = 0;
  std::vector<long long> rows(static_cast<std::size_t>(k), 0), cols(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      n += cm.at(i, j);
      rows[static_cast<std::size_t>(i)] += cm.at(i, j);
      cols[static_cast<std::size_t>(j)] += cm.at(i, j);
    }
    trace += cm.at(i, i);
  }
  Rational iou_sum(0), dice_sum(0);
  int defined = 0;
  for (int c = 0; c < k; ++c) {
    const long long tp = cm.at(c, c), row = rows[static_cast<std::size_t>(c)], col = cols[static_cast<std::size_t>(c)];
    r.precision.push_back(col > 0 ? std::optional<Rational>(Rational(tp, col)) : std::nullopt);
    r.recall.push_back(row > 0 ? std::optional<Rational>(Rational(tp, row)) : std::nullopt);
    if (row + col > 0) {
      r.iou.emplace_back(Rational(tp, row + col - tp));
      r.dice.emplace_back(Rational(2 * tp, row + col));
    } else {
      r.iou.emplace_back(std::nullopt);
      r.dice.emplace_back(std::nullopt);
    }
    if (c < cm.scored_classes && row > 0) {
      iou_sum += *r.iou.back();
      dice_sum += *r.dice.back();
      ++defined;
    }
  }
  r.overall_accuracy = Rational(trace, n);
  Rational pe(0);
  for (int c = 0; c < k; ++c) pe += Rational(rows[static_cast<std::size_t>(c)] * cols[static_cast<std::size_t>(c)], n * n);
  r.kappa = pe == Rational(1) ? Rational(1) : (r.overall_accuracy - pe) / (Rational(1) - pe);
  if (defined > 0) {
    r.mean_iou = iou_sum / Rational(defined);
    r.mean_dice = dice_sum / Rational(defined);
  }
  return r;
}

std::pair<std::optional<Rational>, std::vector<ReferenceSegment>> reference_segment_accuracy(const GradeMask& pred,
                                                                                            const GradeMask& gt) {
  BinaryMask road(pred.width(), pred.height());
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) road.set(x, y, pred(x, y) != roadkit::Label::Background);
  }
  const auto [labels, count] = flood_fill(road);
  std::vector<ReferenceSegment> segs;
  long long correct = 0;
  for (int c = 1; c <= count; ++c) {
    long long n = 0, sx = 0, sy = 0;
    long long votes[3] = {0, 0, 0};
    for (int y = 0; y < pred.height(); ++y) {
      for (int x = 0; x < pred.width(); ++x) {
        if (labels(x, y) != c) continue;
        ++n;
        sx += x;
        sy += y;
        ++votes[label_index(pred(x, y))];
      }
    }
    int g = 0;
    if (votes[1] > votes[g]) g = 1;
    if (votes[2] > votes[g]) g = 2;
    ReferenceSegment s;
    s.grade = roadkit::kGrades[static_cast<std::size_t>(g)];
    const Rational mx = Rational(sx, n) + Rational(1, 2), my = Rational(sy, n) + Rational(1, 2);
    s.centroid = {static_cast<int>(mx.numerator() / mx.denominator()), static_cast<int>(my.numerator() / my.denominator())};
    std::optional<Pixel> hit;
    if (gt(s.centroid.x, s.centroid.y) != roadkit::Label::Background) {
      hit = s.centroid;
    } else {
      for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
          if (gt(x, y) == roadkit::Label::Background) continue;
          const long long dd = d2({x, y}, s.centroid);
          if (dd <= 100 && (!hit || dd < d2(*hit, s.centroid))) hit = Pixel{x, y};
        }
      }
    }
    s.matched = hit.has_value();
    s.correct = hit && label_index(gt[*hit]) == g;
    if (s.correct) ++correct;
    segs.push_back(s);
  }
  std::optional<Rational> acc;
  if (count > 0) acc = Rational(correct, count);
  return {acc, segs};
}

bool same(const roadkit::Ratio& r, const Rational& q) {
  return r.num == static_cast<__int128>(q.numerator()) && r.den == static_cast<__int128>(q.denominator());
}

bool same(const std::optional<roadkit::Ratio>& r, const std::optional<Rational>& q) {
  if (r.has_value() != q.has_value()) return false;
  return !r || same(*r, *q);
}

GradeMask random_grade_mask(std::mt19937_64& rng, int width, int height) {
  GradeMask m(width, height);
  std::uniform_int_distribution<int> label(0, 3);
  for (auto& v : m.values()) v = static_cast<roadkit::Label>(label(rng));
  return m;
}

}  // namespace oracle
