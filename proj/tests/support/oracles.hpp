#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code paths they verify.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "rooftop/detection.hpp"
#include "rooftop/evaluation.hpp"
#include "rooftop/geometry.hpp"
#include "rooftop/mask.hpp"
#include "rooftop/roialign.hpp"

namespace rooftop::oracle {

/// Box IoU by rasterizing both boxes on a grid of `cell`-sized squares and
/// counting cells whose centers fall inside.
inline double raster_box_iou(const Box& a, const Box& b, double cell = 0.01) {
  const double x0 = std::min(a.x1(), b.x1());
  const double y0 = std::min(a.y1(), b.y1());
  const double x1 = std::max(a.x2(), b.x2());
  const double y1 = std::max(a.y2(), b.y2());
  const auto nx = static_cast<long>(std::ceil((x1 - x0) / cell));
  const auto ny = static_cast<long>(std::ceil((y1 - y0) / cell));
  long inter = 0, uni = 0;
  auto inside = [](const Box& r, double x, double y) {
    return x >= r.x1() && x < r.x2() && y >= r.y1() && y < r.y2();
  };
  for (long iy = 0; iy < ny; ++iy) {
    const double y = y0 + (iy + 0.5) * cell;
    for (long ix = 0; ix < nx; ++ix) {
      const double x = x0 + (ix + 0.5) * cell;
      const bool ia = inside(a, x, y);
      const bool ib = inside(b, x, y);
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

/// Closed-form IoU written out independently of rooftop::iou_box.
inline double plain_iou(const Box& a, const Box& b) {
  const double ix1 = a.x1() > b.x1() ? a.x1() : b.x1();
  const double iy1 = a.y1() > b.y1() ? a.y1() : b.y1();
  const double ix2 = a.x2() < b.x2() ? a.x2() : b.x2();
  const double iy2 = a.y2() < b.y2() ? a.y2() : b.y2();
  const double iw = ix2 > ix1 ? ix2 - ix1 : 0.0;
  const double ih = iy2 > iy1 ? iy2 - iy1 : 0.0;
  const double inter = iw * ih;
  const double uni = (a.x2() - a.x1()) * (a.y2() - a.y1()) +
                     (b.x2() - b.x1()) * (b.y2() - b.y1()) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// O(n^2) greedy suppression by repeated argmax over the survivors.
inline std::vector<std::size_t> brute_force_nms(const std::vector<Box>& boxes,
                                                const std::vector<double>& scores,
                                                double thr) {
  std::vector<bool> alive(boxes.size(), true);
  std::vector<std::size_t> keep;
  for (;;) {
    std::size_t best = boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (!alive[i]) continue;
      if (best == boxes.size() || scores[i] > scores[best]) best = i;
    }
    if (best == boxes.size()) return keep;
    keep.push_back(best);
    alive[best] = false;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (alive[i] && plain_iou(boxes[best], boxes[i]) > thr) alive[i] = false;
    }
  }
}

/// Bilinear interpolation written from the four-neighbor definition.
inline double ref_bilinear(const FeatureMap& m, int c, double x, double y) {
  const double xl = std::floor(x), yl = std::floor(y);
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double xi = xl + dx, yi = yl + dy;
      if (xi < 0 || yi < 0 || xi >= m.width() || yi >= m.height()) continue;
      const double wx = 1.0 - std::abs(x - xi);
      const double wy = 1.0 - std::abs(y - yi);
      acc += wx * wy * m.at(c, static_cast<int>(yi), static_cast<int>(xi));
    }
  }
  return acc;
}

/// Bin averages from an n x n grid of samples per bin.
inline std::vector<double> dense_roi_align(const FeatureMap& m, const Box& roi,
                                           int out_size, int n = 100) {
  const double s = m.stride();
  const double x0 = roi.x1() / s, y0 = roi.y1() / s;
  const double bw = (roi.x2() / s - x0) / out_size;
  const double bh = (roi.y2() / s - y0) / out_size;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.channels()) * out_size * out_size);
  for (int c = 0; c < m.channels(); ++c) {
    for (int by = 0; by < out_size; ++by) {
      for (int bx = 0; bx < out_size; ++bx) {
        double acc = 0.0;
        for (int iy = 0; iy < n; ++iy) {
          const double y = y0 + by * bh + (iy + 0.5) * bh / n;
          for (int ix = 0; ix < n; ++ix) {
            const double x = x0 + bx * bw + (ix + 0.5) * bw / n;
            acc += ref_bilinear(m, c, x, y);
          }
        }
        out.push_back(acc / (static_cast<double>(n) * n));
      }
    }
  }
  return out;
}

/// Per-pixel counting of two image-sized masks.
inline PixelConfusion naive_confusion(const BinaryMask& pred,
                                      const BinaryMask& gt) {
  PixelConfusion c;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const bool p = pred.at(x, y), g = gt.at(x, y);
      if (p && g) ++c.tp;
      else if (!p && !g) ++c.tn;
      else if (p) ++c.fp;
      else ++c.fn;
    }
  }
  return c;
}

inline double naive_mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const auto c = naive_confusion(a, b);
  const std::size_t uni = c.tp + c.fp + c.fn;
  return uni ? static_cast<double>(c.tp) / uni : 0.0;
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Exhaustive matching oracle.
///
/// Enumerates every partial one-to-one assignment of predictions to ground
/// truths and keeps the ones consistent with the greedy rule: visiting
/// predictions by descending score (lower index on ties), each takes the
/// best still-free ground truth (lower index on IoU ties) when that IoU is
/// at least thr, and nothing otherwise. Exactly one assignment qualifies;
/// `consistent` reports how many did.
inline Counts exhaustive_greedy_match(
    const std::vector<double>& scores,
    const std::function<double(std::size_t, std::size_t)>& iou,
    std::size_t n_gt, double thr, std::size_t* consistent = nullptr) {
  const std::size_t n = scores.size();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> assign(n, kNone);
  std::vector<bool> used(n_gt, false);

  // Processing order derived by pairwise comparison (selection), not sort.
  std::vector<std::size_t> order;
  std::vector<bool> placed(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pick = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      if (pick == kNone || scores[i] > scores[pick]) pick = i;
    }
    placed[pick] = true;
    order.push_back(pick);
  }

  auto satisfies_greedy = [&]() {
    std::vector<bool> taken(n_gt, false);
    for (std::size_t p : order) {
      double best = -1.0;
      std::size_t best_g = kNone;
      for (std::size_t g = 0; g < n_gt; ++g) {
        if (taken[g]) continue;
        const double v = iou(p, g);
        if (v > best) {
          best = v;
          best_g = g;
        }
      }
      const std::size_t want =
          (best_g != kNone && best >= thr) ? best_g : kNone;
      if (assign[p] != want) return false;
      if (want != kNone) taken[want] = true;
    }
    return true;
  };

  Counts result;
  std::size_t hits = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t p) {
    if (p == n) {
      if (satisfies_greedy()) {
        ++hits;
        Counts c;
        for (auto a : assign) c.tp += a != kNone;
        c.fp = n - c.tp;
        c.fn = n_gt - c.tp;
        result = c;
      }
      return;
    }
    assign[p] = kNone;
    rec(p + 1);
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (used[g]) continue;
      used[g] = true;
      assign[p] = g;
      rec(p + 1);
      assign[p] = kNone;
      used[g] = false;
    }
  };
  rec(0);
  if (consistent) *consistent = hits;
  return result;
}

/// Column (in pixels from the box's left edge) where a row of a pasted mask
/// switches from set to unset, found by sampling the probability grid on a
/// fine lattice over the box with clamped bilinear interpolation.
inline std::vector<double> dense_paste_row_boundaries(
    const std::vector<double>& probs, int m, const Box& box, double thr,
    int n = 1000) {
  auto sample = [&](double u, double v) {
    u = std::clamp(u, 0.0, m - 1.0);
    v = std::clamp(v, 0.0, m - 1.0);
    const int u0 = static_cast<int>(u), v0 = static_cast<int>(v);
    const int u1 = std::min(u0 + 1, m - 1), v1 = std::min(v0 + 1, m - 1);
    const double fu = u - u0, fv = v - v0;
    auto g = [&](int x, int y) { return probs[static_cast<std::size_t>(y) * m + x]; };
    return g(u0, v0) * (1 - fu) * (1 - fv) + g(u1, v0) * fu * (1 - fv) +
           g(u0, v1) * (1 - fu) * fv + g(u1, v1) * fu * fv;
  };
  std::vector<double> boundary;
  for (int iy = 0; iy < n; ++iy) {
    const double fy = (iy + 0.5) / n;
    const double v = fy * m - 0.5;
    double edge = 0.0;
    for (int ix = 0; ix < n; ++ix) {
      const double fx = (ix + 0.5) / n;
      if (sample(fx * m - 0.5, v) >= thr) edge = (ix + 1.0) / n;
    }
    boundary.push_back(edge * box.width());
  }
  return boundary;
}

}  // namespace rooftop::oracle
