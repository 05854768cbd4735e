#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rooftop/roialign.hpp"
#include "support/oracles.hpp"

using namespace rooftop;

namespace {

FeatureMap linear_map(int h, int w, double a, double bx, double by,
                      double stride = 16) {
  FeatureMap m(h, w, 1, stride);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) m.at(0, i, j) = a + bx * j + by * i;
  }
  return m;
}

FeatureMap random_map(std::mt19937_64& rng, int h, int w, int c, double stride) {
  FeatureMap m(h, w, c, stride);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

// RoI inside the region where every bilinear neighbor exists.
Box interior_roi(std::mt19937_64& rng, const FeatureMap& m) {
  std::uniform_real_distribution<double> u(0, 1);
  const double xmax = (m.width() - 1) * m.stride();
  const double ymax = (m.height() - 1) * m.stride();
  const double x1 = u(rng) * xmax * 0.8, y1 = u(rng) * ymax * 0.8;
  const double x2 = x1 + 1.0 + u(rng) * (xmax - x1 - 1.0);
  const double y2 = y1 + 1.0 + u(rng) * (ymax - y1 - 1.0);
  return Box(x1, y1, x2, y2);
}

}  // namespace

TEST(FeatureMap, RejectsBadShapes) {
  EXPECT_THROW(FeatureMap(0, 3, 1, 16), InvalidArgument);
  EXPECT_THROW(FeatureMap(3, 3, 1, 0.5), InvalidArgument);
}

TEST(BilinearSample, IntegerCoordinateReturnsCell) {
  std::mt19937_64 rng(1);
  const auto m = random_map(rng, 8, 6, 2, 16);
  EXPECT_DOUBLE_EQ(bilinear_sample(m, 3, 5, 1), m.at(1, 5, 3));
  EXPECT_DOUBLE_EQ(bilinear_sample(m, 0, 0, 0), m.at(0, 0, 0));
}

TEST(BilinearSample, ConstantMap) {
  FeatureMap m(5, 5, 1, 1);
  for (auto& v : m.values()) v = 2.5;
  EXPECT_NEAR(bilinear_sample(m, 1.3, 2.9, 0), 2.5, 1e-15);
  EXPECT_NEAR(bilinear_sample(m, 3.999, 0.001, 0), 2.5, 1e-12);
}

TEST(BilinearSample, RampInX) {
  const auto m = linear_map(4, 4, 0, 1, 0, 1);
  EXPECT_NEAR(bilinear_sample(m, 1.5, 1.0, 0), 1.5, 1e-15);
  EXPECT_NEAR(bilinear_sample(m, 2.25, 2.75, 0), 2.25, 1e-15);
}

TEST(BilinearSample, OutsideNeighborsContributeZero) {
  FeatureMap m(2, 2, 1, 1);
  for (auto& v : m.values()) v = 1.0;
  EXPECT_NEAR(bilinear_sample(m, 1.5, 0.0, 0), 0.5, 1e-15);
  EXPECT_NEAR(bilinear_sample(m, -0.5, -0.5, 0), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(bilinear_sample(m, 5.0, 0.0, 0), 0.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(m, -1e9, 1e9, 0), 0.0);
}

TEST(BilinearSample, ChannelOutOfRange) {
  FeatureMap m(2, 2, 1, 1);
  EXPECT_THROW(bilinear_sample(m, 0, 0, 1), InvalidArgument);
  EXPECT_THROW(bilinear_sample(m, 0, 0, -1), InvalidArgument);
}

TEST(BilinearSample, MatchesReference) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 12);
  const auto m = random_map(rng, 9, 10, 3, 8);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng);
    const int c = static_cast<int>(rng() % 3);
    EXPECT_NEAR(bilinear_sample(m, x, y, c), oracle::ref_bilinear(m, c, x, y), 1e-12);
  }
}

TEST(RoiAlign, ConstantMap) {
  FeatureMap m(10, 10, 2, 16);
  for (auto& v : m.values()) v = -3.0;
  const auto out = roi_align(m, Box(20, 30, 100, 90), RoiAlignConfig{7, 2});
  ASSERT_EQ(out.values.size(), 7u * 7u * 2u);
  for (double v : out.values) EXPECT_NEAR(v, -3.0, 1e-12);
}

TEST(RoiAlign, LinearMapEqualsBinCentroid) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = u(rng), bx = u(rng), by = u(rng);
    const auto m = linear_map(12, 14, a, bx, by, 16);
    const Box roi = interior_roi(rng, m);
    const RoiAlignConfig cfg{7, 2};
    const auto out = roi_align(m, roi, cfg);
    const double bw = roi.width() / 16 / 7, bh = roi.height() / 16 / 7;
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 7; ++c) {
        const double cx = roi.x1() / 16 + (c + 0.5) * bw;
        const double cy = roi.y1() / 16 + (r + 0.5) * bh;
        EXPECT_NEAR(out.at(0, r, c), a + bx * cx + by * cy, 1e-9);
      }
    }
  }
}

TEST(RoiAlign, QuarterCellShiftIsNotQuantized) {
  const auto m = linear_map(10, 10, 0, 2.0, 0, 1);
  const RoiAlignConfig cfg{4, 2};
  const auto base = roi_align(m, Box(2, 2, 6, 6), cfg);
  const auto moved = roi_align(m, Box(2.25, 2, 6.25, 6), cfg);
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    EXPECT_NEAR(moved.values[i] - base.values[i], 0.25 * 2.0, 1e-12);
  }
}

TEST(RoiAlign, ChannelsIndependent) {
  std::mt19937_64 rng(6);
  auto m = random_map(rng, 8, 8, 3, 4);
  const Box roi(3, 5, 20, 26);
  const auto before = roi_align(m, roi, RoiAlignConfig{5, 2});
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) m.at(1, i, j) = 1e6;
  }
  const auto after = roi_align(m, roi, RoiAlignConfig{5, 2});
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      EXPECT_EQ(after.at(0, r, c), before.at(0, r, c));
      EXPECT_EQ(after.at(2, r, c), before.at(2, r, c));
    }
  }
}

TEST(RoiAlign, Linearity) {
  std::mt19937_64 rng(8);
  const auto a = random_map(rng, 7, 9, 2, 8);
  const auto b = random_map(rng, 7, 9, 2, 8);
  const double alpha = 1.7, beta = -0.6;
  FeatureMap mix(7, 9, 2, 8);
  for (std::size_t i = 0; i < mix.values().size(); ++i) {
    mix.values()[i] = alpha * a.values()[i] + beta * b.values()[i];
  }
  for (int trial = 0; trial < 20; ++trial) {
    const Box roi = interior_roi(rng, a);
    const RoiAlignConfig cfg{7, 2};
    const auto ra = roi_align(a, roi, cfg), rb = roi_align(b, roi, cfg),
               rm = roi_align(mix, roi, cfg);
    for (std::size_t i = 0; i < rm.values.size(); ++i) {
      EXPECT_NEAR(rm.values[i], alpha * ra.values[i] + beta * rb.values[i], 1e-9);
    }
  }
}

TEST(RoiAlign, OutputShapeIndependentOfRoi) {
  std::mt19937_64 rng(10);
  const auto m = random_map(rng, 16, 16, 3, 16);
  for (const Box& roi : {Box(0, 0, 2, 2), Box(0, 0, 256, 256), Box(-50, -50, 400, 30)}) {
    const auto out = roi_align(m, roi, RoiAlignConfig{14, 2});
    EXPECT_EQ(out.size, 14);
    EXPECT_EQ(out.channels, 3);
    EXPECT_EQ(out.values.size(), 14u * 14u * 3u);
  }
}

TEST(RoiAlign, DegenerateRoi) {
  FeatureMap m(4, 4, 1, 16);
  EXPECT_THROW(roi_align(m, Box(5, 5, 5, 40), RoiAlignConfig{}), DegenerateRoi);
  EXPECT_THROW(roi_align(m, Box(5, 5, 5.001, 5.001), RoiAlignConfig{}), DegenerateRoi);
  EXPECT_THROW(roi_align(m, Box(0, 0, 16, 16), RoiAlignConfig{0, 2}), InvalidArgument);
}

TEST(RoiAlign, CloseToDenseOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_map(rng, 4 + rng() % 12, 4 + rng() % 12, 2, 16);
    const Box roi = interior_roi(rng, m);
    const auto out = roi_align(m, roi, RoiAlignConfig{7, 8});
    const auto ref = oracle::dense_roi_align(m, roi, 7);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_LE(std::abs(out.values[i] - ref[i]), 0.05 * std::abs(ref[i]));
    }
  }
}

TEST(RoiAlign, ConvergesToDenseOracleWithSampling) {
  std::mt19937_64 rng(13);
  const auto m = random_map(rng, 10, 10, 1, 16);
  const Box roi(10, 12, 120, 100);
  const auto ref = oracle::dense_roi_align(m, roi, 7, 200);
  double prev = 1e9;
  for (int sp : {1, 4, 16, 64}) {
    const auto out = roi_align(m, roi, RoiAlignConfig{7, sp});
    double worst = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(out.values[i] - ref[i]));
    }
    EXPECT_LT(worst, prev);
    prev = worst;
  }
  EXPECT_LT(prev, 1e-3);
}
