#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rooftop/error.hpp"

namespace rooftop {

/// 8-bit raster with interleaved channels (RGB = 3, grey = 1), row-major.
class ImagePatch {
 public:
  ImagePatch() = default;

  ImagePatch(int width, int height, int channels)
      : width_(width), height_(height), channels_(channels) {
    check_dims();
    data_.assign(pixel_count() * channels_, 0);
  }

  ImagePatch(int width, int height, int channels,
             std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels),
        data_(std::move(data)) {
    check_dims();
    if (data_.size() != pixel_count() * channels_) {
      throw InvalidArgument("image data length does not match dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const ImagePatch&, const ImagePatch&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  void check_dims() const {
    if (width_ < 0 || height_ < 0) {
      throw InvalidArgument("image dimensions must be non-negative");
    }
    if (channels_ < 1) throw InvalidArgument("image needs at least 1 channel");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 3;
  std::vector<std::uint8_t> data_;
};

}  // namespace rooftop
