#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rooftop/error.hpp"
#include "rooftop/mask.hpp"

namespace rooftop::io {

/// Row-major run lengths alternating background/building, always starting
/// with a (possibly empty) background run.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint64_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

inline RleMask rle_encode(const BinaryMask& m) {
  RleMask r{m.width(), m.height(), {}};
  const auto bits = m.bits();
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (auto b : bits) {
    if (b != current) {
      r.runs.push_back(run);
      current = b;
      run = 0;
    }
    ++run;
  }
  if (run > 0 || r.runs.empty()) r.runs.push_back(run);
  return r;
}

inline BinaryMask rle_decode(const RleMask& r) {
  if (r.width < 0 || r.height < 0) throw CorruptData("RLE: negative dimensions");
  const std::uint64_t total =
      static_cast<std::uint64_t>(r.width) * static_cast<std::uint64_t>(r.height);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    if (i > 0 && r.runs[i] == 0) {
      throw CorruptData("RLE: zero-length run after the leading one");
    }
    sum += r.runs[i];
    if (sum > total) break;
  }
  if (sum != total || (r.runs.empty() && total != 0)) {
    throw CorruptData("RLE: run lengths sum to " + std::to_string(sum) +
                      ", expected " + std::to_string(total));
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  std::uint8_t v = 0;
  for (auto n : r.runs) {
    bits.insert(bits.end(), n, v);
    v ^= 1;
  }
  return BinaryMask(r.width, r.height, std::move(bits));
}

}  // namespace rooftop::io
