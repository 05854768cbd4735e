#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "rooftop/error.hpp"
#include "rooftop/geometry.hpp"
#include "rooftop/mask.hpp"

namespace rooftop {

enum class Label { background = 0, building = 1 };

inline std::string_view to_string(Label l) {
  return l == Label::building ? "building" : "background";
}

inline Label label_from_string(std::string_view s) {
  if (s == "building") return Label::building;
  if (s == "background") return Label::background;
  throw CorruptData("unknown label '" + std::string(s) + "'");
}

struct Detection {
  Box box;
  Label label = Label::building;
  double score = 0.0;
  // Placed in the same coordinate frame as the box.
  std::optional<PlacedMask> mask;

  friend bool operator==(const Detection&, const Detection&) = default;
};

inline void validate(const Detection& d) {
  if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0) {
    throw InvalidArgument("detection score must lie in [0, 1]");
  }
}

}  // namespace rooftop
