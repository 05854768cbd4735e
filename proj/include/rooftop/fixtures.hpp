#pragma once

// Test fixtures that stand in for learned weights: an RPN scorer and a head
// that know the ground truth, plus a synthetic rooftop scene generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rooftop/heads.hpp"
#include "rooftop/tiling.hpp"

namespace rooftop {

namespace detail {

inline const Box* best_match(std::span<const Box> truth, const Box& b,
                             double& best_iou) {
  const Box* best = nullptr;
  best_iou = 0.0;
  for (const Box& g : truth) {
    const double v = iou_box(b, g);
    if (v > best_iou) {
      best_iou = v;
      best = &g;
    }
  }
  return best;
}

}  // namespace detail

/// Objectness is the anchor's best IoU with a planted box; the delta
/// regresses the anchor onto that box.
class OracleRpnScorer final : public RpnScorer {
 public:
  explicit OracleRpnScorer(std::vector<Box> truth) : truth_(std::move(truth)) {}

  RpnOutputs score(const FeatureMap&, std::span<const Box> anchors, int,
                   int) const override {
    RpnOutputs out;
    out.objectness.reserve(anchors.size());
    out.deltas.reserve(anchors.size());
    for (const Box& a : anchors) {
      double v = 0.0;
      const Box* g = detail::best_match(truth_, a, v);
      out.objectness.push_back(v);
      out.deltas.push_back(g ? encode_deltas(a, *g) : BoxDelta{});
    }
    return out;
  }

 private:
  std::vector<Box> truth_;
};

/// Building probability equals the proposal's best IoU with a planted box;
/// the refinement lands on that box and the mask fills it.
class OracleHead final : public DetectionHead {
 public:
  explicit OracleHead(std::vector<Box> truth, int mask_size = 28)
      : truth_(std::move(truth)), mask_size_(mask_size) {}

  HeadOutputs predict(const RoiFeatures&, const RoiFeatures&,
                      const Box& proposal) const override {
    double v = 0.0;
    const Box* g = detail::best_match(truth_, proposal, v);
    HeadOutputs out;
    const double p = std::clamp(v, 1e-9, 1.0 - 1e-9);
    out.class_logits = {0.0, std::log(p / (1.0 - p))};
    if (g) out.box_delta = encode_deltas(proposal, *g);
    out.mask_size = mask_size_;
    out.mask_logits.assign(static_cast<std::size_t>(mask_size_) * mask_size_,
                           g ? 20.0 : -20.0);
    return out;
  }

 private:
  std::vector<Box> truth_;
  int mask_size_;
};

/// Axis-aligned rectangular "roofs" on plain ground.
struct SyntheticScene {
  ImagePatch image;
  std::vector<Box> buildings;  // integer-aligned
  BinaryMask truth;            // union of the buildings
};

struct SceneOptions {
  int width = 512;
  int height = 512;
  int min_buildings = 1;
  int max_buildings = 8;
  int min_side = 16;
  int max_side = 96;
  // Free pixels kept between buildings so they stay separate components.
  int gap = 4;
};

inline SyntheticScene make_synthetic_scene(std::uint64_t seed,
                                           const SceneOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  auto draw = [&](int lo, int hi) {
    return lo + static_cast<int>(detail::uniform_below(
                    rng, static_cast<std::uint64_t>(hi - lo + 1)));
  };

  SyntheticScene s;
  s.image = ImagePatch(opt.width, opt.height, 3);
  s.truth = BinaryMask(opt.width, opt.height);
  for (int y = 0; y < opt.height; ++y) {
    for (int x = 0; x < opt.width; ++x) {
      s.image.at(x, y, 0) = 52;
      s.image.at(x, y, 1) = 70;
      s.image.at(x, y, 2) = 48;
    }
  }

  const int target = draw(opt.min_buildings, opt.max_buildings);
  for (int attempt = 0;
       attempt < 1000 && static_cast<int>(s.buildings.size()) < target;
       ++attempt) {
    const int w = draw(opt.min_side, opt.max_side);
    const int h = draw(opt.min_side, opt.max_side);
    if (w + 2 * opt.gap > opt.width || h + 2 * opt.gap > opt.height) continue;
    const int x = draw(opt.gap, opt.width - w - opt.gap);
    const int y = draw(opt.gap, opt.height - h - opt.gap);
    const Box b(x, y, x + w, y + h);
    const Box padded(x - opt.gap, y - opt.gap, x + w + opt.gap, y + h + opt.gap);
    const bool clear = std::none_of(
        s.buildings.begin(), s.buildings.end(),
        [&](const Box& o) { return intersection_area(padded, o) > 0.0; });
    if (!clear) continue;
    s.buildings.push_back(b);
    const auto shade = static_cast<std::uint8_t>(draw(170, 235));
    for (int py = y; py < y + h; ++py) {
      for (int px = x; px < x + w; ++px) {
        s.image.at(px, py, 0) = shade;
        s.image.at(px, py, 1) = static_cast<std::uint8_t>(shade - 10);
        s.image.at(px, py, 2) = static_cast<std::uint8_t>(shade - 25);
        s.truth.set(px, py);
      }
    }
  }
  return s;
}

}  // namespace rooftop
