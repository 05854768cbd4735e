#pragma once

// Grid manifest written by `tile`, read back by `split` and `detect`:
//
//   rooftop-tiles 1
//   source <stem>
//   extension <ppm|pgm>
//   image_width <w>
//   image_height <h>
//   tile_size <n>
//   overlap <n>
//   rows <r>
//   cols <c>
//   tile <row> <col> <x_offset> <y_offset> <valid_w> <valid_h> <file>
//   ...
//
// Tile files are named <stem>_r<row>_c<col>.<ext> and live next to the
// manifest.

#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rooftop/error.hpp"
#include "rooftop/io/atomic_file.hpp"
#include "rooftop/tiling.hpp"

namespace rooftop::io {

inline constexpr const char* kManifestMagic = "rooftop-tiles";
inline constexpr int kManifestVersion = 1;

struct TileEntry {
  Tile tile;
  std::string file;

  friend bool operator==(const TileEntry&, const TileEntry&) = default;
};

struct GridManifest {
  std::string source;
  std::string extension = "ppm";
  TileGrid grid;
  std::vector<TileEntry> tiles;

  friend bool operator==(const GridManifest&, const GridManifest&) = default;
};

inline std::string tile_file_name(const std::string& stem, int row, int col,
                                  const std::string& ext) {
  return stem + "_r" + std::to_string(row) + "_c" + std::to_string(col) + "." +
         ext;
}

inline GridManifest make_manifest(const std::string& source,
                                  const std::string& ext, const TileGrid& grid) {
  GridManifest m{source, ext, grid, {}};
  for (const Tile& t : grid.tiles()) {
    m.tiles.push_back({t, tile_file_name(source, t.row, t.col, ext)});
  }
  return m;
}

inline void write_manifest(std::ostream& os, const GridManifest& m) {
  os << kManifestMagic << ' ' << kManifestVersion << '\n'
     << "source " << m.source << '\n'
     << "extension " << m.extension << '\n'
     << "image_width " << m.grid.image_width() << '\n'
     << "image_height " << m.grid.image_height() << '\n'
     << "tile_size " << m.grid.tile_size() << '\n'
     << "overlap " << m.grid.overlap() << '\n'
     << "rows " << m.grid.rows() << '\n'
     << "cols " << m.grid.cols() << '\n';
  for (const auto& e : m.tiles) {
    const Tile& t = e.tile;
    os << "tile " << t.row << ' ' << t.col << ' ' << t.x_offset << ' '
       << t.y_offset << ' ' << t.valid_width << ' ' << t.valid_height << ' '
       << e.file << '\n';
  }
}

inline void write_manifest(const std::filesystem::path& path,
                           const GridManifest& m) {
  write_atomically(path, [&](std::ostream& os) { write_manifest(os, m); });
}

inline GridManifest parse_manifest(std::istream& is) {
  auto fail = [](const std::string& msg) {
    return CorruptData("manifest: " + msg);
  };
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kManifestMagic) {
    throw fail("missing '" + std::string(kManifestMagic) + "' header");
  }
  if (version != kManifestVersion) {
    throw fail("unsupported version " + std::to_string(version));
  }

  auto expect = [&](const char* key) {
    std::string k;
    if (!(is >> k) || k != key) throw fail(std::string("expected '") + key + "'");
  };
  auto read_int = [&](const char* key) {
    expect(key);
    int v = 0;
    if (!(is >> v)) throw fail(std::string("bad value for '") + key + "'");
    return v;
  };

  GridManifest m;
  expect("source");
  if (!(is >> m.source)) throw fail("missing source");
  expect("extension");
  if (!(is >> m.extension)) throw fail("missing extension");
  const int w = read_int("image_width");
  const int h = read_int("image_height");
  const int ts = read_int("tile_size");
  const int ov = read_int("overlap");
  const int rows = read_int("rows");
  const int cols = read_int("cols");
  try {
    m.grid = TileGrid(w, h, ts, ov);
  } catch (const InvalidArgument& e) {
    throw fail(e.what());
  }
  if (m.grid.rows() != rows || m.grid.cols() != cols) {
    throw fail("rows/cols inconsistent with image and tile size");
  }

  std::string word;
  while (is >> word) {
    if (word != "tile") throw fail("unexpected token '" + word + "'");
    TileEntry e;
    Tile& t = e.tile;
    if (!(is >> t.row >> t.col >> t.x_offset >> t.y_offset >> t.valid_width >>
          t.valid_height >> e.file)) {
      throw fail("truncated tile line");
    }
    // Entries are listed once each, in raster order.
    const auto k = static_cast<int>(m.tiles.size());
    if (k >= rows * cols || t.row != k / cols || t.col != k % cols) {
      throw fail("tile (" + std::to_string(t.row) + ", " +
                 std::to_string(t.col) + ") out of raster order");
    }
    if (!(m.grid.tile(t.row, t.col) == t)) {
      throw fail("tile (" + std::to_string(t.row) + ", " +
                 std::to_string(t.col) + ") geometry disagrees with the grid");
    }
    m.tiles.push_back(std::move(e));
  }
  if (m.tiles.size() != static_cast<std::size_t>(rows) * cols) {
    throw fail("expected " + std::to_string(rows * cols) + " tiles, found " +
               std::to_string(m.tiles.size()));
  }
  return m;
}

inline GridManifest read_manifest(const std::filesystem::path& path) {
  std::istringstream is(read_text_file(path));
  try {
    return parse_manifest(is);
  } catch (const CorruptData& e) {
    throw CorruptData(path.string() + ": " + e.what());
  }
}

}  // namespace rooftop::io
