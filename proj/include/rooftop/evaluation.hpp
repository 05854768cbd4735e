#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rooftop/detection.hpp"
#include "rooftop/error.hpp"
#include "rooftop/geometry.hpp"
#include "rooftop/mask.hpp"

namespace rooftop {

enum class IouKind { box, mask };

inline std::string_view to_string(IouKind k) {
  return k == IouKind::box ? "box" : "mask";
}

inline IouKind iou_kind_from_string(std::string_view s) {
  if (s == "box") return IouKind::box;
  if (s == "mask") return IouKind::mask;
  throw InvalidArgument("iou kind must be 'box' or 'mask', got '" +
                        std::string(s) + "'");
}

struct GroundTruthInstance {
  Box box;
  PlacedMask mask;
};

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou_threshold = 0.5;
  IouKind iou_kind = IouKind::mask;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// P = tp / (tp + fp), R = tp / (tp + fn), F1 = 2PR / (P + R); each is 0
/// when its denominator is 0.
inline EvalReport precision_recall_f1(std::size_t tp, std::size_t fp,
                                      std::size_t fn,
                                      double iou_threshold = 0.5,
                                      IouKind kind = IouKind::mask) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.iou_threshold = iou_threshold;
  r.iou_kind = kind;
  r.precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
  const double pr = r.precision + r.recall;
  r.f1 = pr > 0.0 ? 2.0 * r.precision * r.recall / pr : 0.0;
  return r;
}

/// Micro-average: sums counts and recomputes the ratios.
inline EvalReport aggregate(std::span<const EvalReport> reports) {
  if (reports.empty()) throw InvalidArgument("aggregate: no reports");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : reports) {
    if (r.iou_threshold != reports.front().iou_threshold ||
        r.iou_kind != reports.front().iou_kind) {
      throw InvalidArgument("aggregate: reports use different IoU settings");
    }
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
  }
  return precision_recall_f1(tp, fp, fn, reports.front().iou_threshold,
                             reports.front().iou_kind);
}

inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("mask_iou: dimension mismatch");
  }
  std::size_t inter = 0, uni = 0;
  const auto ab = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += ab[i] & bb[i];
    uni += ab[i] | bb[i];
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// IoU of two masks anchored in the same image frame.
inline double mask_iou(const PlacedMask& a, const PlacedMask& b) {
  const std::size_t ca = a.mask.count();
  const std::size_t cb = b.mask.count();
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.mask.width(), b.x + b.mask.width());
  const int y1 = std::min(a.y + a.mask.height(), b.y + b.mask.height());
  std::size_t inter = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      inter += a.mask.at(x - a.x, y - a.y) && b.mask.at(x - b.x, y - b.y);
    }
  }
  const std::size_t uni = ca + cb - inter;
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct PixelConfusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const PixelConfusion&, const PixelConfusion&) = default;
};

inline PixelConfusion pixel_confusion(const BinaryMask& pred,
                                      const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw InvalidArgument("pixel_confusion: dimension mismatch");
  }
  PixelConfusion c;
  const auto p = pred.bits();
  const auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      g[i] ? ++c.tp : ++c.fp;
    } else {
      g[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  // (prediction index, ground-truth index)
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Greedy one-to-one matching.
///
/// Predictions are visited by descending score (lower index first on ties);
/// each claims the still-unmatched ground truth with the highest IoU, lower
/// ground-truth index first on ties, provided that IoU >= iou_threshold.
inline MatchResult match_detections(std::span<const Detection> preds,
                                    std::span<const GroundTruthInstance> gts,
                                    double iou_threshold,
                                    IouKind kind = IouKind::mask) {
  if (kind == IouKind::mask) {
    for (const auto& p : preds) {
      if (!p.mask) throw InvalidArgument("mask matching needs prediction masks");
    }
  }
  auto iou = [&](std::size_t pi, std::size_t gi) {
    if (kind == IouKind::box) return iou_box(preds[pi].box, gts[gi].box);
    return mask_iou(*preds[pi].mask, gts[gi].mask);
  };

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });

  MatchResult r;
  std::vector<char> claimed(gts.size(), 0);
  for (std::size_t pi : order) {
    double best = -1.0;
    std::size_t best_g = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi]) continue;
      const double v = iou(pi, gi);
      if (v > best) {
        best = v;
        best_g = gi;
      }
    }
    if (best_g < gts.size() && best >= iou_threshold) {
      claimed[best_g] = 1;
      r.pairs.emplace_back(pi, best_g);
    }
  }
  r.tp = r.pairs.size();
  r.fp = preds.size() - r.tp;
  r.fn = gts.size() - r.tp;
  return r;
}

inline EvalReport evaluate_image(std::span<const Detection> preds,
                                 std::span<const GroundTruthInstance> gts,
                                 double iou_threshold,
                                 IouKind kind = IouKind::mask) {
  const auto m = match_detections(preds, gts, iou_threshold, kind);
  return precision_recall_f1(m.tp, m.fp, m.fn, iou_threshold, kind);
}

/// Splits a binary ground-truth raster into instances, one per
/// 4-connected component of building pixels, in raster-scan order of each
/// component's first pixel.
inline std::vector<GroundTruthInstance> connected_components(
    const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  std::vector<std::int32_t> label(m.size(), -1);
  std::vector<GroundTruthInstance> out;
  std::vector<std::pair<int, int>> stack;
  std::vector<std::pair<int, int>> pixels;

  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
      if (!m.at(sx, sy) || label[si] >= 0) continue;
      const auto id = static_cast<std::int32_t>(out.size());
      int minx = sx, maxx = sx, miny = sy, maxy = sy;
      pixels.clear();
      stack.assign(1, {sx, sy});
      label[si] = id;
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        pixels.emplace_back(x, y);
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
        const std::pair<int, int> nbrs[] = {
            {x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& [nx, ny] : nbrs) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m.at(nx, ny)) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (label[ni] >= 0) continue;
          label[ni] = id;
          stack.emplace_back(nx, ny);
        }
      }
      GroundTruthInstance g;
      g.box = Box(minx, miny, maxx + 1, maxy + 1);
      g.mask = PlacedMask{minx, miny, BinaryMask(maxx - minx + 1, maxy - miny + 1)};
      for (const auto& [x, y] : pixels) g.mask.mask.set(x - minx, y - miny);
      out.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace rooftop
