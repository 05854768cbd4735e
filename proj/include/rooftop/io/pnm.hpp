#pragma once

// Binary Netpbm rasters: P5 (grey) and P6 (RGB), maxval 255 only.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rooftop/error.hpp"
#include "rooftop/image.hpp"
#include "rooftop/io/atomic_file.hpp"
#include "rooftop/mask.hpp"

namespace rooftop::io {

namespace detail {

inline void skip_space_and_comments(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (c != EOF && std::isspace(c)) {
      is.get();
    } else {
      return;
    }
  }
}

inline int read_header_int(std::istream& is, const char* what) {
  skip_space_and_comments(is);
  int v = -1;
  if (!(is >> v) || v < 0) {
    throw CorruptData(std::string("bad PNM header field: ") + what);
  }
  return v;
}

}  // namespace detail

inline ImagePatch read_pnm(std::istream& is) {
  char magic[2] = {0, 0};
  is.read(magic, 2);
  if (!is || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw CorruptData("not a binary PGM/PPM (expected P5 or P6)");
  }
  const int channels = magic[1] == '6' ? 3 : 1;
  const int w = detail::read_header_int(is, "width");
  const int h = detail::read_header_int(is, "height");
  const int maxval = detail::read_header_int(is, "maxval");
  if (maxval != 255) throw CorruptData("only 8-bit PNM (maxval 255) supported");
  // Exactly one whitespace byte separates the header from the raster.
  const int sep = is.get();
  if (sep == EOF || !std::isspace(sep)) throw CorruptData("bad PNM header end");

  ImagePatch img(w, h, channels);
  auto data = img.data();
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(is.gcount()) != data.size()) {
    throw CorruptData("PNM raster truncated");
  }
  return img;
}

inline ImagePatch read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_pnm(is);
  } catch (const CorruptData& e) {
    throw CorruptData(path.string() + ": " + e.what());
  }
}

inline void write_pnm(std::ostream& os, const ImagePatch& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw InvalidArgument("PNM output needs 1 or 3 channels");
  }
  os << (img.channels() == 3 ? "P6" : "P5") << '\n'
     << img.width() << ' ' << img.height() << '\n'
     << 255 << '\n';
  const auto data = img.data();
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size()));
}

inline void write_pnm(const std::filesystem::path& path, const ImagePatch& img) {
  write_atomically(path, [&](std::ostream& os) { write_pnm(os, img); });
}

/// Masks travel as PGM: 255 for building, 0 otherwise. Any nonzero grey
/// reads back as building.
inline BinaryMask read_mask(const std::filesystem::path& path) {
  const ImagePatch img = read_pnm(path);
  if (img.channels() != 1) {
    throw CorruptData(path.string() + ": mask must be a greyscale PGM");
  }
  std::vector<std::uint8_t> bits(img.data().begin(), img.data().end());
  return BinaryMask(img.width(), img.height(), std::move(bits));
}

inline ImagePatch mask_to_image(const BinaryMask& m) {
  ImagePatch img(m.width(), m.height(), 1);
  auto d = img.data();
  const auto b = m.bits();
  for (std::size_t i = 0; i < b.size(); ++i) d[i] = b[i] ? 255 : 0;
  return img;
}

inline void write_mask(const std::filesystem::path& path, const BinaryMask& m) {
  write_pnm(path, mask_to_image(m));
}

}  // namespace rooftop::io
