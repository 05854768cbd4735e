#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rooftop/detection.hpp"
#include "rooftop/error.hpp"
#include "rooftop/image.hpp"
#include "rooftop/proposal.hpp"

namespace rooftop {

struct Tile {
  int row = 0;
  int col = 0;
  int x_offset = 0;
  int y_offset = 0;
  int valid_width = 0;
  int valid_height = 0;

  friend bool operator==(const Tile&, const Tile&) = default;
};

/// Regular grid of tile_size x tile_size patches over an image. Edge tiles
/// are padded to full size; their real content is recorded as the valid
/// region. With overlap = 0 (the default) the valid regions partition the
/// image.
class TileGrid {
 public:
  TileGrid() = default;

  TileGrid(int image_width, int image_height, int tile_size, int overlap = 0)
      : image_width_(image_width), image_height_(image_height),
        tile_size_(tile_size), overlap_(overlap) {
    if (image_width <= 0 || image_height <= 0) {
      throw InvalidArgument("image dimensions must be positive");
    }
    if (tile_size <= 0) throw InvalidArgument("tile size must be positive");
    if (overlap < 0 || overlap >= tile_size) {
      throw InvalidArgument("tile overlap must lie in [0, tile_size)");
    }
    rows_ = count_along(image_height);
    cols_ = count_along(image_width);
  }

  int image_width() const { return image_width_; }
  int image_height() const { return image_height_; }
  int tile_size() const { return tile_size_; }
  int overlap() const { return overlap_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int step() const { return tile_size_ - overlap_; }
  std::size_t tile_count() const {
    return static_cast<std::size_t>(rows_) * cols_;
  }

  Tile tile(int row, int col) const {
    if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
      throw InvalidArgument("tile index (" + std::to_string(row) + ", " +
                            std::to_string(col) + ") outside " +
                            std::to_string(rows_) + "x" +
                            std::to_string(cols_) + " grid");
    }
    Tile t;
    t.row = row;
    t.col = col;
    t.x_offset = col * step();
    t.y_offset = row * step();
    t.valid_width = std::min(tile_size_, image_width_ - t.x_offset);
    t.valid_height = std::min(tile_size_, image_height_ - t.y_offset);
    return t;
  }

  /// All tiles in row-major order.
  std::vector<Tile> tiles() const {
    std::vector<Tile> out;
    out.reserve(tile_count());
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) out.push_back(tile(r, c));
    }
    return out;
  }

  friend bool operator==(const TileGrid&, const TileGrid&) = default;

 private:
  int count_along(int extent) const {
    if (extent <= tile_size_) return 1;
    const int s = step();
    return 1 + (extent - tile_size_ + s - 1) / s;
  }

  int image_width_ = 0;
  int image_height_ = 0;
  int tile_size_ = 512;
  int overlap_ = 0;
  int rows_ = 0;
  int cols_ = 0;
};

inline TileGrid make_grid(int image_width, int image_height,
                          int tile_size = 512) {
  return TileGrid(image_width, image_height, tile_size);
}

/// Copies one tile out of the source image. The result is always
/// tile_size x tile_size; pixels beyond the source are zero.
inline ImagePatch extract_tile(const ImagePatch& image, const TileGrid& grid,
                               int row, int col) {
  if (image.width() != grid.image_width() ||
      image.height() != grid.image_height()) {
    throw InvalidArgument("extract_tile: image does not match grid");
  }
  const Tile t = grid.tile(row, col);
  const int ch = image.channels();
  ImagePatch out(grid.tile_size(), grid.tile_size(), ch);
  const auto src = image.data();
  auto dst = out.data();
  const std::size_t row_bytes = static_cast<std::size_t>(t.valid_width) * ch;
  for (int y = 0; y < t.valid_height; ++y) {
    const std::size_t s =
        (static_cast<std::size_t>(t.y_offset + y) * image.width() + t.x_offset) *
        ch;
    const std::size_t d = static_cast<std::size_t>(y) * grid.tile_size() * ch;
    std::memcpy(dst.data() + d, src.data() + s, row_bytes);
  }
  return out;
}

namespace detail {

// Unbiased draw in [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined, and splits must be identical across toolchains.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

}  // namespace detail

/// Seeded shuffle followed by a cut: the first round(train_fraction * N)
/// shuffled items form the training set, the rest the test set.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(
    std::vector<T> ids, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw InvalidArgument("train_fraction must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(detail::uniform_below(rng, i));
    std::swap(ids[i - 1], ids[j]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(ids.size())));
  std::vector<T> test(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                      ids.end());
  ids.resize(n_train);
  return {std::move(ids), std::move(test)};
}

inline Detection translate_detection(Detection d, double dx, double dy) {
  d.box = d.box.translated(dx, dy);
  if (d.mask) {
    d.mask->x += static_cast<int>(dx);
    d.mask->y += static_cast<int>(dy);
  }
  return d;
}

/// Tile-local to global coordinates.
inline Detection tile_to_global(const Detection& d, const Tile& tile) {
  return translate_detection(d, tile.x_offset, tile.y_offset);
}

inline Detection global_to_tile(const Detection& d, const Tile& tile) {
  return translate_detection(d, -tile.x_offset, -tile.y_offset);
}

struct TileDetections {
  Tile tile;
  std::vector<Detection> detections;
};

namespace detail {

// Trims a tile-local detection to the tile's valid region. Returns false when
// nothing of it lies on real image content.
inline bool trim_to_valid(Detection& d, const Tile& t) {
  if (d.box.x1() >= t.valid_width || d.box.y1() >= t.valid_height) {
    return false;
  }
  d.box = clip_box(d.box, t.valid_width, t.valid_height);
  if (!(d.box.area() > 0.0)) return false;
  if (d.mask) {
    auto& pm = *d.mask;
    for (int my = 0; my < pm.mask.height(); ++my) {
      for (int mx = 0; mx < pm.mask.width(); ++mx) {
        const int lx = pm.x + mx;
        const int ly = pm.y + my;
        if (lx >= t.valid_width || ly >= t.valid_height) pm.mask.set(mx, my, false);
      }
    }
  }
  return true;
}

}  // namespace detail

/// Maps per-tile detections to global coordinates and removes duplicates
/// that straddle tile borders with greedy NMS. Detections lying entirely in
/// a tile's zero padding are dropped.
///
/// Equal scores are ordered by (tile row, tile col, box), so the result does
/// not depend on the order of per_tile. Output is sorted by descending score.
inline std::vector<Detection> stitch(std::span<const TileDetections> per_tile,
                                     double nms_iou = 0.5) {
  struct Keyed {
    Detection det;
    int row;
    int col;
  };
  std::vector<Keyed> all;
  for (const auto& td : per_tile) {
    for (Detection d : td.detections) {
      if (!detail::trim_to_valid(d, td.tile)) continue;
      all.push_back({tile_to_global(d, td.tile), td.tile.row, td.tile.col});
    }
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const Keyed& a = all[i];
    const Keyed& b = all[j];
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.det.box < b.det.box;
  });

  std::vector<Box> boxes;
  std::vector<double> scores;
  for (std::size_t i : order) {
    boxes.push_back(all[i].det.box);
    scores.push_back(all[i].det.score);
  }
  std::vector<Detection> out;
  for (std::size_t k : nms(boxes, scores, nms_iou)) {
    out.push_back(std::move(all[order[k]].det));
  }
  return out;
}

}  // namespace rooftop
