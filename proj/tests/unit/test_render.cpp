#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rooftop/render.hpp"

using namespace rooftop;

namespace {

ImagePatch noise(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ImagePatch img(w, h, 3);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng());
  return img;
}

Detection boxed(const Box& b, std::optional<PlacedMask> m = {}) {
  Detection d;
  d.box = b;
  d.score = 0.9;
  d.mask = std::move(m);
  return d;
}

bool on_perimeter(int x, int y, int x0, int y0, int x1, int y1) {
  const bool inside = x >= x0 && x < x1 && y >= y0 && y < y1;
  const bool interior = x >= x0 + 2 && x < x1 - 2 && y >= y0 + 2 && y < y1 - 2;
  return inside && !interior;
}

}  // namespace

TEST(Overlay, NoDetectionsIsIdentity) {
  const auto img = noise(20, 15, 1);
  EXPECT_EQ(render_overlay(img, {}), img);
}

TEST(Overlay, EmptyMaskChangesOnlyPerimeter) {
  const auto img = noise(30, 30, 2);
  const std::vector<Detection> dets = {boxed(Box(5, 6, 17, 20), PlacedMask{5, 6, BinaryMask(12, 14)})};
  const auto out = render_overlay(img, dets);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 30; ++x) {
      for (int c = 0; c < 3; ++c) {
        if (on_perimeter(x, y, 5, 6, 17, 20)) {
          const std::uint8_t blue[3] = {0, 0, 255};
          EXPECT_EQ(out.at(x, y, c), blue[c]);
        } else {
          EXPECT_EQ(out.at(x, y, c), img.at(x, y, c)) << x << "," << y;
        }
      }
    }
  }
}

TEST(Overlay, MaskedPixelBlend) {
  const auto img = noise(40, 40, 3);
  PlacedMask m{10, 10, BinaryMask(20, 20)};
  m.mask.set(7, 9);  // global (17, 19), well inside the outline
  const std::vector<Detection> dets = {boxed(Box(10, 10, 30, 30), m)};
  const auto out = render_overlay(img, dets);
  const int yellow[3] = {255, 255, 0};
  for (int c = 0; c < 3; ++c) {
    const double want = std::round(0.55 * img.at(17, 19, c) + 0.45 * yellow[c]);
    EXPECT_EQ(out.at(17, 19, c), want);
  }
}

TEST(Overlay, UntouchedOutsideMasksAndOutlines) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto img = noise(48, 48, 100 + trial);
    std::vector<Detection> dets;
    BinaryMask covered(48, 48);
    for (int k = 0; k < 3; ++k) {
      const int x = static_cast<int>(rng() % 40) - 4, y = static_cast<int>(rng() % 40) - 4;
      const int w = 3 + static_cast<int>(rng() % 20), h = 3 + static_cast<int>(rng() % 20);
      PlacedMask pm{x, y, BinaryMask(w, h)};
      for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
          if (rng() % 2) pm.mask.set(i, j);
        }
      }
      const int bx = std::max(x, 0), by = std::max(y, 0);
      for (int py = 0; py < 48; ++py) {
        for (int px = 0; px < 48; ++px) {
          if (pm.at_global(px, py) || on_perimeter(px, py, bx, by, x + w, y + h)) {
            covered.set(px, py);
          }
        }
      }
      dets.push_back(boxed(Box(bx, by, x + w, y + h), pm));
    }
    const auto out = render_overlay(img, dets);
    for (int py = 0; py < 48; ++py) {
      for (int px = 0; px < 48; ++px) {
        if (covered.at(px, py)) continue;
        for (int c = 0; c < 3; ++c) {
          ASSERT_EQ(out.at(px, py, c), img.at(px, py, c)) << px << "," << py;
        }
      }
    }
  }
}

TEST(Overlay, GrayscaleInputPromotedToRgb) {
  ImagePatch gray(4, 4, 1);
  for (auto& v : gray.data()) v = 90;
  const auto out = render_overlay(gray, {});
  EXPECT_EQ(out.channels(), 3);
  EXPECT_EQ(out.at(2, 3, 1), 90);
}
