#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rooftop/error.hpp"

namespace rooftop {

/// Per-pixel building (1) / non-building (0) raster, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int width, int height)
      : width_(width), height_(height), bits_(checked_size(width, height), 0) {}

  BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
      : width_(width), height_(height), bits_(std::move(bits)) {
    if (bits_.size() != checked_size(width, height)) {
      throw InvalidArgument("mask bit count does not match width*height");
    }
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }

  bool at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  /// Bounds-checked read; pixels outside the raster are background.
  bool get_or_zero(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
    return at(x, y);
  }

  std::span<const std::uint8_t> bits() const { return bits_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) {
      throw InvalidArgument("mask dimensions must be non-negative");
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// A mask raster anchored at an integer pixel origin of a larger image.
/// An image-sized mask is the special case x = y = 0.
struct PlacedMask {
  int x = 0;
  int y = 0;
  BinaryMask mask;

  bool at_global(int gx, int gy) const {
    return mask.get_or_zero(gx - x, gy - y);
  }

  /// Materializes the mask on a full image canvas, clipping what falls
  /// outside it.
  BinaryMask to_image(int image_width, int image_height) const {
    BinaryMask out(image_width, image_height);
    for (int my = 0; my < mask.height(); ++my) {
      const int gy = y + my;
      if (gy < 0 || gy >= image_height) continue;
      for (int mx = 0; mx < mask.width(); ++mx) {
        const int gx = x + mx;
        if (gx < 0 || gx >= image_width) continue;
        if (mask.at(mx, my)) out.set(gx, gy);
      }
    }
    return out;
  }

  friend bool operator==(const PlacedMask&, const PlacedMask&) = default;
};

}  // namespace rooftop
