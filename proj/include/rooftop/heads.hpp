#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rooftop/detection.hpp"
#include "rooftop/error.hpp"
#include "rooftop/geometry.hpp"
#include "rooftop/image.hpp"
#include "rooftop/mask.hpp"
#include "rooftop/proposal.hpp"
#include "rooftop/roialign.hpp"

namespace rooftop {

/// Numerically stable softmax (max-subtracted).
inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("softmax of empty input");
  for (double l : logits) {
    if (!std::isfinite(l)) throw InvalidArgument("softmax logits must be finite");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct HeadOutputs {
  // (background, building)
  std::array<double, 2> class_logits{0.0, 0.0};
  BoxDelta box_delta;
  int mask_size = 28;
  std::vector<double> mask_logits;  // mask_size x mask_size, row-major
};

struct PipelineConfig {
  AnchorSpec anchors;
  ProposalConfig proposal;
  RoiAlignConfig box_roi{7, 2};
  RoiAlignConfig mask_roi{14, 2};
  double detection_score_threshold = 0.7;
  double detection_nms_iou = 0.5;
  double mask_binarize_threshold = 0.5;
  int mask_size = 28;

  void validate() const {
    anchors.validate();
    proposal.validate();
    box_roi.validate();
    mask_roi.validate();
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(detection_score_threshold) || !unit(detection_nms_iou) ||
        !unit(mask_binarize_threshold)) {
      throw InvalidArgument("pipeline thresholds must lie in [0, 1]");
    }
    if (mask_size < 1) throw InvalidArgument("mask_size must be >= 1");
  }
};

/// Image patch to feature map. Output is ceil(h / stride) x ceil(w / stride).
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual double stride() const = 0;
  virtual FeatureMap extract(const ImagePatch& patch) const = 0;
};

struct RpnOutputs {
  std::vector<double> objectness;  // one per anchor, in [0, 1]
  std::vector<BoxDelta> deltas;    // one per anchor
};

/// Scores every anchor as object vs background and regresses a delta.
class RpnScorer {
 public:
  virtual ~RpnScorer() = default;
  virtual RpnOutputs score(const FeatureMap& features,
                           std::span<const Box> anchors, int image_width,
                           int image_height) const = 0;
};

/// Classification, box refinement and mask branches for one proposal.
class DetectionHead {
 public:
  virtual ~DetectionHead() = default;
  virtual HeadOutputs predict(const RoiFeatures& box_features,
                              const RoiFeatures& mask_features,
                              const Box& proposal) const = 0;
};

namespace detail {

// Bilinear lookup in an M x M grid whose cell k is centered at k + 0.5, with
// border clamping so a constant grid stays constant up to the box edge.
inline double grid_sample_clamped(std::span<const double> grid, int m, double u,
                                  double v) {
  u = std::clamp(u, 0.0, static_cast<double>(m - 1));
  v = std::clamp(v, 0.0, static_cast<double>(m - 1));
  const int u0 = std::min(static_cast<int>(u), m - 1);
  const int v0 = std::min(static_cast<int>(v), m - 1);
  const int u1 = std::min(u0 + 1, m - 1);
  const int v1 = std::min(v0 + 1, m - 1);
  const double au = u - u0;
  const double av = v - v0;
  auto g = [&](int x, int y) {
    return grid[static_cast<std::size_t>(y) * m + x];
  };
  return (1.0 - av) * ((1.0 - au) * g(u0, v0) + au * g(u1, v0)) +
         av * ((1.0 - au) * g(u0, v1) + au * g(u1, v1));
}

}  // namespace detail

/// Resamples an M x M probability grid onto the pixels whose centers fall in
/// the box, binarizes at threshold (p >= threshold is building) and returns
/// the result cropped to the box's pixel footprint within the image.
inline PlacedMask paste_mask_placed(std::span<const double> mask_probs,
                                    const Box& box, int image_w, int image_h,
                                    double threshold) {
  const auto m = static_cast<int>(std::lround(std::sqrt(mask_probs.size())));
  if (m < 1 || static_cast<std::size_t>(m) * m != mask_probs.size()) {
    throw InvalidArgument("paste_mask: mask grid must be square and nonempty");
  }
  if (!(box.area() > 0.0)) throw DegenerateBox("paste_mask: zero-area box");

  const int px0 = std::clamp(static_cast<int>(std::floor(box.x1())), 0, image_w);
  const int py0 = std::clamp(static_cast<int>(std::floor(box.y1())), 0, image_h);
  const int px1 = std::clamp(static_cast<int>(std::ceil(box.x2())), 0, image_w);
  const int py1 = std::clamp(static_cast<int>(std::ceil(box.y2())), 0, image_h);

  PlacedMask out{px0, py0, BinaryMask(px1 - px0, py1 - py0)};
  const double sx = m / box.width();
  const double sy = m / box.height();
  for (int py = py0; py < py1; ++py) {
    const double cy = py + 0.5;
    if (cy < box.y1() || cy >= box.y2()) continue;
    const double v = (cy - box.y1()) * sy - 0.5;
    for (int px = px0; px < px1; ++px) {
      const double cx = px + 0.5;
      if (cx < box.x1() || cx >= box.x2()) continue;
      const double u = (cx - box.x1()) * sx - 0.5;
      if (detail::grid_sample_clamped(mask_probs, m, u, v) >= threshold) {
        out.mask.set(px - px0, py - py0);
      }
    }
  }
  return out;
}

/// Image-sized variant of paste_mask_placed.
inline BinaryMask paste_mask(std::span<const double> mask_probs, const Box& box,
                             int image_w, int image_h, double threshold) {
  return paste_mask_placed(mask_probs, box, image_w, image_h, threshold)
      .to_image(image_w, image_h);
}

/// Weight-free stand-in backbone with stride 16.
///
/// Channel 0 is the cell-mean luminance in [0, 1]. Channels 1 and 2 are the
/// cell-mean absolute forward differences of luminance along x and y
/// (stencil [-1, 1], replicated border). Partial edge cells average only the
/// pixels they contain.
class ToyBackbone final : public Backbone {
 public:
  static constexpr int kStride = 16;
  static constexpr int kChannels = 3;

  double stride() const override { return kStride; }

  FeatureMap extract(const ImagePatch& patch) const override {
    if (patch.empty()) throw InvalidArgument("toy backbone: empty patch");
    const int w = patch.width();
    const int h = patch.height();
    std::vector<double> lum(patch.pixel_count());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        lum[static_cast<std::size_t>(y) * w + x] = luminance(patch, x, y);
      }
    }
    auto L = [&](int x, int y) {
      x = std::min(x, w - 1);
      y = std::min(y, h - 1);
      return lum[static_cast<std::size_t>(y) * w + x];
    };

    const int fh = (h + kStride - 1) / kStride;
    const int fw = (w + kStride - 1) / kStride;
    FeatureMap fm(fh, fw, kChannels, kStride);
    for (int i = 0; i < fh; ++i) {
      for (int j = 0; j < fw; ++j) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        int n = 0;
        for (int y = i * kStride; y < std::min(h, (i + 1) * kStride); ++y) {
          for (int x = j * kStride; x < std::min(w, (j + 1) * kStride); ++x) {
            const double c = L(x, y);
            s0 += c;
            s1 += std::abs(L(x + 1, y) - c);
            s2 += std::abs(L(x, y + 1) - c);
            ++n;
          }
        }
        fm.at(0, i, j) = s0 / n;
        fm.at(1, i, j) = s1 / n;
        fm.at(2, i, j) = s2 / n;
      }
    }
    return fm;
  }

  static double luminance(const ImagePatch& p, int x, int y) {
    if (p.channels() >= 3) {
      return (0.299 * p.at(x, y, 0) + 0.587 * p.at(x, y, 1) +
              0.114 * p.at(x, y, 2)) /
             255.0;
    }
    return p.at(x, y, 0) / 255.0;
  }
};

/// Heuristic objectness: anchors whose pooled luminance exceeds the map mean
/// score high. Regresses nothing.
class ToyRpnScorer final : public RpnScorer {
 public:
  explicit ToyRpnScorer(double gain = 12.0) : gain_(gain) {}

  RpnOutputs score(const FeatureMap& features, std::span<const Box> anchors,
                   int image_width, int image_height) const override {
    const auto lum = features.channel(0);
    double mean = 0.0;
    for (double v : lum) mean += v;
    mean /= static_cast<double>(lum.size());

    RpnOutputs out;
    out.objectness.reserve(anchors.size());
    out.deltas.assign(anchors.size(), BoxDelta{});
    const RoiAlignConfig pool{1, 4};
    for (const Box& a : anchors) {
      const Box c = clip_box(a, image_width, image_height);
      if (c.width() * c.height() / (features.stride() * features.stride()) <
          1e-6) {
        out.objectness.push_back(0.0);
        continue;
      }
      const double inside = roi_align(features, c, pool).at(0, 0, 0);
      out.objectness.push_back(sigmoid(gain_ * (inside - mean)));
    }
    return out;
  }

 private:
  double gain_;
};

/// Heuristic head: bright RoIs are buildings, the mask is the bright part of
/// the RoI. Keeps the proposal box as is.
class ToyHead final : public DetectionHead {
 public:
  explicit ToyHead(double level = 0.5, double gain = 10.0, int mask_size = 28)
      : level_(level), gain_(gain), mask_size_(mask_size) {}

  HeadOutputs predict(const RoiFeatures& box_features,
                      const RoiFeatures& mask_features,
                      const Box&) const override {
    double mean = 0.0;
    for (int r = 0; r < box_features.size; ++r) {
      for (int c = 0; c < box_features.size; ++c) {
        mean += box_features.at(0, r, c);
      }
    }
    mean /= static_cast<double>(box_features.size) * box_features.size;

    HeadOutputs out;
    out.class_logits = {0.0, gain_ * (mean - level_)};
    out.mask_size = mask_size_;
    out.mask_logits.resize(static_cast<std::size_t>(mask_size_) * mask_size_);
    const auto plane = std::span<const double>(mask_features.values)
                           .subspan(0, static_cast<std::size_t>(
                                           mask_features.size) *
                                           mask_features.size);
    const double k = static_cast<double>(mask_features.size) / mask_size_;
    for (int r = 0; r < mask_size_; ++r) {
      for (int c = 0; c < mask_size_; ++c) {
        const double v = detail::grid_sample_clamped(
            plane, mask_features.size, (c + 0.5) * k - 0.5, (r + 0.5) * k - 0.5);
        out.mask_logits[static_cast<std::size_t>(r) * mask_size_ + c] =
            gain_ * (v - level_);
      }
    }
    return out;
  }

 private:
  double level_;
  double gain_;
  int mask_size_;
};

/// Runs one patch end to end: backbone, anchors, RPN scoring, proposal
/// filtering, RoIAlign, head, softmax, score threshold, box refinement,
/// NMS and mask pasting. Detections are in patch pixel coordinates, sorted
/// by descending score.
inline std::vector<Detection> run_patch_pipeline(const ImagePatch& patch,
                                                 const Backbone& backbone,
                                                 const RpnScorer& rpn_scorer,
                                                 const DetectionHead& head,
                                                 const PipelineConfig& cfg) {
  cfg.validate();
  const double stride = backbone.stride();
  if (patch.width() < stride || patch.height() < stride) {
    throw InvalidArgument("patch smaller than backbone stride");
  }
  if (cfg.anchors.stride != stride) {
    throw InvalidArgument("anchor stride does not match backbone stride");
  }

  const FeatureMap features = backbone.extract(patch);
  const auto expect_h = static_cast<int>(std::ceil(patch.height() / stride));
  const auto expect_w = static_cast<int>(std::ceil(patch.width() / stride));
  if (features.height() != expect_h || features.width() != expect_w) {
    throw InvalidArgument("backbone output shape does not match its stride");
  }

  const auto anchors =
      generate_anchors(features.height(), features.width(), cfg.anchors);
  const RpnOutputs rpn =
      rpn_scorer.score(features, anchors, patch.width(), patch.height());
  const auto proposals =
      filter_proposals(anchors, rpn.objectness, rpn.deltas, patch.width(),
                       patch.height(), cfg.proposal);

  struct Candidate {
    Box box;
    double score;
    std::vector<double> mask_probs;
  };
  std::vector<Candidate> candidates;
  for (const ScoredBox& p : proposals) {
    const RoiFeatures box_feats = roi_align(features, p.box, cfg.box_roi);
    const RoiFeatures mask_feats = roi_align(features, p.box, cfg.mask_roi);
    HeadOutputs ho = head.predict(box_feats, mask_feats, p.box);
    if (ho.mask_size < 1 ||
        ho.mask_logits.size() !=
            static_cast<std::size_t>(ho.mask_size) * ho.mask_size) {
      throw InvalidArgument("head returned a non-square mask grid");
    }
    const auto probs = softmax(ho.class_logits);
    const double score = probs[static_cast<std::size_t>(Label::building)];
    if (score < cfg.detection_score_threshold) continue;
    const Box refined =
        clip_box(decode_deltas(p.box, ho.box_delta), patch.width(),
                 patch.height());
    if (!(refined.area() > 0.0)) continue;
    std::vector<double> mp(ho.mask_logits.size());
    std::transform(ho.mask_logits.begin(), ho.mask_logits.end(), mp.begin(),
                   sigmoid);
    candidates.push_back({refined, score, std::move(mp)});
  }

  std::vector<Box> boxes;
  std::vector<double> scores;
  for (const auto& c : candidates) {
    boxes.push_back(c.box);
    scores.push_back(c.score);
  }
  std::vector<Detection> out;
  for (std::size_t i : nms(boxes, scores, cfg.detection_nms_iou)) {
    const auto& c = candidates[i];
    Detection d;
    d.box = c.box;
    d.label = Label::building;
    d.score = c.score;
    d.mask = paste_mask_placed(c.mask_probs, c.box, patch.width(),
                               patch.height(), cfg.mask_binarize_threshold);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace rooftop
