#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rooftop/error.hpp"
#include "rooftop/geometry.hpp"

namespace rooftop {

/// C-channel grid of reals, stored channel-major ([c][row][col]).
///
/// The value of cell (i, j) lives at the continuous coordinate (x = j, y = i).
/// stride is the number of image pixels per cell.
class FeatureMap {
 public:
  FeatureMap() = default;

  FeatureMap(int height, int width, int channels, double stride)
      : height_(height), width_(width), channels_(channels), stride_(stride) {
    if (height < 1 || width < 1 || channels < 1) {
      throw InvalidArgument("feature map dimensions must be >= 1");
    }
    if (!(stride >= 1.0)) throw InvalidArgument("feature stride must be >= 1");
    values_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  double stride() const { return stride_; }

  double at(int c, int i, int j) const { return values_[index(c, i, j)]; }
  double& at(int c, int i, int j) { return values_[index(c, i, j)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Contiguous height*width slice for one channel.
  std::span<const double> channel(int c) const {
    const std::size_t plane = static_cast<std::size_t>(height_) * width_;
    return std::span<const double>(values_).subspan(c * plane, plane);
  }

 private:
  std::size_t index(int c, int i, int j) const {
    return (static_cast<std::size_t>(c) * height_ + i) * width_ + j;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  double stride_ = 1.0;
  std::vector<double> values_;
};

struct RoiAlignConfig {
  int output_size = 7;
  int sampling_points = 2;

  void validate() const {
    if (output_size < 1) throw InvalidArgument("roi output_size must be >= 1");
    if (sampling_points < 1) {
      throw InvalidArgument("roi sampling_points must be >= 1");
    }
  }
};

/// output_size x output_size x channels block, stored [c][row][col].
struct RoiFeatures {
  int size = 0;
  int channels = 0;
  std::vector<double> values;

  double at(int c, int row, int col) const {
    return values[(static_cast<std::size_t>(c) * size + row) * size + col];
  }
};

namespace detail {

inline double bilinear_plane(std::span<const double> plane, int height,
                             int width, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  // Far outside the grid nothing can contribute; this also keeps the int
  // conversions below in range.
  if (fx < -1.0 || fy < -1.0 || fx > width || fy > height) return 0.0;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;

  auto value = [&](int xi, int yi) {
    if (xi < 0 || yi < 0 || xi >= width || yi >= height) return 0.0;
    return plane[static_cast<std::size_t>(yi) * width + xi];
  };

  return (1.0 - ay) * ((1.0 - ax) * value(x0, y0) + ax * value(x0 + 1, y0)) +
         ay * ((1.0 - ax) * value(x0, y0 + 1) + ax * value(x0 + 1, y0 + 1));
}

}  // namespace detail

/// Bilinear interpolation at a continuous cell coordinate. Neighbors outside
/// the grid contribute zero.
inline double bilinear_sample(const FeatureMap& map, double x, double y,
                              int channel) {
  if (channel < 0 || channel >= map.channels()) {
    throw InvalidArgument("bilinear_sample: channel out of range");
  }
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw InvalidArgument("bilinear_sample: coordinates must be finite");
  }
  return detail::bilinear_plane(map.channel(channel), map.height(), map.width(),
                                x, y);
}

/// Fixed-size RoI feature extraction without coordinate rounding.
///
/// The roi (image pixels) is divided by map.stride() into cell coordinates,
/// split into output_size^2 equal bins, and each bin is the mean of
/// sampling_points^2 bilinear samples taken at the centers of a regular
/// subdivision of the bin.
inline RoiFeatures roi_align(const FeatureMap& map, const Box& roi,
                             const RoiAlignConfig& cfg) {
  cfg.validate();
  const double scale = 1.0 / map.stride();
  const double x0 = roi.x1() * scale;
  const double y0 = roi.y1() * scale;
  const double roi_w = roi.width() * scale;
  const double roi_h = roi.height() * scale;
  if (roi_w * roi_h < 1e-6) {
    throw DegenerateRoi("roi_align: roi area below 1e-6 cells");
  }

  const int n = cfg.output_size;
  const int sp = cfg.sampling_points;
  const double bin_w = roi_w / n;
  const double bin_h = roi_h / n;
  const double inv_count = 1.0 / (static_cast<double>(sp) * sp);

  RoiFeatures out;
  out.size = n;
  out.channels = map.channels();
  out.values.assign(static_cast<std::size_t>(n) * n * map.channels(), 0.0);

  for (int c = 0; c < map.channels(); ++c) {
    const auto plane = map.channel(c);
    for (int by = 0; by < n; ++by) {
      for (int bx = 0; bx < n; ++bx) {
        double acc = 0.0;
        for (int sy = 0; sy < sp; ++sy) {
          const double y = y0 + (by + (sy + 0.5) / sp) * bin_h;
          for (int sx = 0; sx < sp; ++sx) {
            const double x = x0 + (bx + (sx + 0.5) / sp) * bin_w;
            acc += detail::bilinear_plane(plane, map.height(), map.width(), x,
                                          y);
          }
        }
        out.values[(static_cast<std::size_t>(c) * n + by) * n + bx] =
            acc * inv_count;
      }
    }
  }
  return out;
}

}  // namespace rooftop
