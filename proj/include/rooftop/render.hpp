#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rooftop/detection.hpp"
#include "rooftop/image.hpp"

namespace rooftop {

struct OverlayStyle {
  std::array<std::uint8_t, 3> mask_color{255, 255, 0};
  double mask_alpha = 0.45;
  std::array<std::uint8_t, 3> box_color{0, 0, 255};
  int box_thickness = 2;
};

inline ImagePatch to_rgb(const ImagePatch& img) {
  if (img.channels() == 3) return img;
  ImagePatch out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, 0);
    }
  }
  return out;
}

/// Blends the union of all detection masks with the mask color, then draws
/// each box outline inside the box's pixel footprint. Pixels covered by
/// neither keep their exact input value.
inline ImagePatch render_overlay(const ImagePatch& image,
                                 std::span<const Detection> detections,
                                 const OverlayStyle& style = {}) {
  ImagePatch out = to_rgb(image);
  const int w = out.width();
  const int h = out.height();

  std::vector<std::uint8_t> masked(out.pixel_count(), 0);
  for (const auto& d : detections) {
    if (!d.mask) continue;
    const auto& pm = *d.mask;
    for (int my = 0; my < pm.mask.height(); ++my) {
      const int y = pm.y + my;
      if (y < 0 || y >= h) continue;
      for (int mx = 0; mx < pm.mask.width(); ++mx) {
        const int x = pm.x + mx;
        if (x < 0 || x >= w || !pm.mask.at(mx, my)) continue;
        masked[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  const double keep = 1.0 - style.mask_alpha;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!masked[static_cast<std::size_t>(y) * w + x]) continue;
      for (int c = 0; c < 3; ++c) {
        const double v =
            keep * out.at(x, y, c) + style.mask_alpha * style.mask_color[c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }

  const int t = style.box_thickness;
  for (const auto& d : detections) {
    const int x0 = static_cast<int>(std::floor(d.box.x1()));
    const int y0 = static_cast<int>(std::floor(d.box.y1()));
    const int x1 = static_cast<int>(std::ceil(d.box.x2()));
    const int y1 = static_cast<int>(std::ceil(d.box.y2()));
    for (int y = std::max(y0, 0); y < std::min(y1, h); ++y) {
      for (int x = std::max(x0, 0); x < std::min(x1, w); ++x) {
        const bool edge =
            x < x0 + t || x >= x1 - t || y < y0 + t || y >= y1 - t;
        if (!edge) continue;
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = style.box_color[c];
      }
    }
  }
  return out;
}

}  // namespace rooftop
