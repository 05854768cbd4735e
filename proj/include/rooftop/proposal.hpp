#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "rooftop/error.hpp"
#include "rooftop/geometry.hpp"

namespace rooftop {

/// Three scales times three aspect ratios give nine anchor shapes per
/// feature cell. Ratios are height / width.
struct AnchorSpec {
  std::array<double, 3> scales{64.0, 128.0, 256.0};
  std::array<double, 3> ratios{0.5, 1.0, 2.0};
  double stride = 16.0;

  static constexpr std::size_t kShapesPerCell = 9;

  void validate() const {
    for (double s : scales) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw InvalidArgument("anchor scales must be positive");
      }
    }
    for (double r : ratios) {
      if (!(r > 0.0) || !std::isfinite(r)) {
        throw InvalidArgument("anchor ratios must be positive");
      }
    }
    if (!(stride >= 1.0)) throw InvalidArgument("anchor stride must be >= 1");
  }
};

/// Regression from a reference box to a target: center shifts in units of
/// the reference size and log-space size changes.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  friend bool operator==(const BoxDelta&, const BoxDelta&) = default;
};

// exp() of anything above this overflows into useless boxes anyway.
inline const double kMaxLogScale = std::log(1000.0);

struct ProposalConfig {
  double score_threshold = 0.05;
  std::size_t pre_nms_top_k = 6000;
  double nms_iou = 0.7;
  std::size_t post_nms_top_n = 300;

  void validate() const {
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
      throw InvalidArgument("proposal score_threshold must lie in [0, 1]");
    }
    if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) {
      throw InvalidArgument("proposal nms_iou must lie in [0, 1]");
    }
    if (pre_nms_top_k < 1 || post_nms_top_n < 1) {
      throw InvalidArgument("proposal top-k counts must be >= 1");
    }
  }
};

struct ScoredBox {
  Box box;
  double score = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

/// Anchors for every cell of a feature_h x feature_w map.
///
/// Cell (i, j) is centered at ((j + 0.5) * stride, (i + 0.5) * stride).
/// Ordering is row-major over cells, then ratio-major and scale-minor within
/// a cell, so anchor k of cell (i, j) sits at index (i * feature_w + j) * 9 + k.
/// Anchors are not clipped to the image here.
inline std::vector<Box> generate_anchors(int feature_h, int feature_w,
                                         const AnchorSpec& spec) {
  if (feature_h < 1 || feature_w < 1) {
    throw InvalidArgument("feature map dimensions must be >= 1");
  }
  spec.validate();

  std::array<std::pair<double, double>, AnchorSpec::kShapesPerCell> shapes;
  std::size_t k = 0;
  for (double r : spec.ratios) {
    const double root = std::sqrt(r);
    for (double s : spec.scales) shapes[k++] = {s / root, s * root};
  }

  std::vector<Box> anchors;
  anchors.reserve(static_cast<std::size_t>(feature_h) * feature_w *
                  AnchorSpec::kShapesPerCell);
  for (int i = 0; i < feature_h; ++i) {
    const double cy = (i + 0.5) * spec.stride;
    for (int j = 0; j < feature_w; ++j) {
      const double cx = (j + 0.5) * spec.stride;
      for (const auto& [w, h] : shapes) {
        anchors.push_back(Box::from_center(cx, cy, w, h));
      }
    }
  }
  return anchors;
}

/// Applies a regression delta to a reference box. tw/th are clamped at
/// ln(1000) before exponentiation.
inline Box decode_deltas(const Box& anchor, const BoxDelta& d) {
  if (!std::isfinite(d.tx) || !std::isfinite(d.ty) || !std::isfinite(d.tw) ||
      !std::isfinite(d.th)) {
    throw InvalidArgument("box delta must be finite");
  }
  const double wa = anchor.width();
  const double ha = anchor.height();
  const double cx = anchor.center_x() + d.tx * wa;
  const double cy = anchor.center_y() + d.ty * ha;
  const double w = wa * std::exp(std::min(d.tw, kMaxLogScale));
  const double h = ha * std::exp(std::min(d.th, kMaxLogScale));
  return Box::from_center(cx, cy, w, h);
}

/// Inverse of decode_deltas.
inline BoxDelta encode_deltas(const Box& anchor, const Box& target) {
  if (!(anchor.area() > 0.0) || !(target.area() > 0.0)) {
    throw InvalidArgument("encode_deltas needs positive-area boxes");
  }
  const double wa = anchor.width();
  const double ha = anchor.height();
  return BoxDelta{(target.center_x() - anchor.center_x()) / wa,
                  (target.center_y() - anchor.center_y()) / ha,
                  std::log(target.width() / wa), std::log(target.height() / ha)};
}

/// Greedy non-maximum suppression.
///
/// Repeatedly keeps the highest-scoring remaining box and discards every
/// remaining box whose IoU with it exceeds iou_threshold. Equal scores are
/// resolved in favor of the lower index. Returns kept indices in selection
/// order.
inline std::vector<std::size_t> nms(std::span<const Box> boxes,
                                    std::span<const double> scores,
                                    double iou_threshold) {
  if (boxes.size() != scores.size()) {
    throw InvalidArgument("nms: boxes and scores differ in length");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });

  std::vector<char> suppressed(boxes.size(), 0);
  std::vector<std::size_t> keep;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    keep.push_back(i);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!suppressed[j] && iou_box(boxes[i], boxes[j]) > iou_threshold) {
        suppressed[j] = 1;
      }
    }
  }
  return keep;
}

/// RPN post-processing: decode, clip, threshold, top-k, NMS, truncate.
/// The result is sorted by descending score.
inline std::vector<ScoredBox> filter_proposals(
    std::span<const Box> anchors, std::span<const double> objectness,
    std::span<const BoxDelta> deltas, double image_w, double image_h,
    const ProposalConfig& cfg) {
  if (anchors.size() != objectness.size() || anchors.size() != deltas.size()) {
    throw InvalidArgument("filter_proposals: input lengths differ");
  }
  cfg.validate();

  std::vector<ScoredBox> candidates;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (objectness[i] < cfg.score_threshold) continue;
    const Box b = clip_box(decode_deltas(anchors[i], deltas[i]), image_w,
                           image_h);
    if (b.area() < 1.0) continue;
    candidates.push_back({b, objectness[i]});
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ScoredBox& a, const ScoredBox& b) {
                     return a.score > b.score;
                   });
  if (candidates.size() > cfg.pre_nms_top_k) {
    candidates.resize(cfg.pre_nms_top_k);
  }

  std::vector<Box> boxes;
  std::vector<double> scores;
  boxes.reserve(candidates.size());
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    boxes.push_back(c.box);
    scores.push_back(c.score);
  }

  std::vector<ScoredBox> out;
  for (std::size_t idx : nms(boxes, scores, cfg.nms_iou)) {
    if (out.size() == cfg.post_nms_top_n) break;
    out.push_back(candidates[idx]);
  }
  return out;
}

}  // namespace rooftop
