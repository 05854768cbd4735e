#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <ostream>
#include <string>

#include "rooftop/error.hpp"

namespace rooftop {

/// Axis-aligned rectangle in continuous pixel coordinates.
///
/// (x1, y1) is the top-left corner and (x2, y2) the bottom-right one. The
/// geometry is half-open: a box covering pixels 2..5 is (2, 2, 6, 6) and its
/// area is (x2 - x1) * (y2 - y1), with no "+1" inclusive-pixel convention.
class Box {
 public:
  Box() = default;

  Box(double x1, double y1, double x2, double y2)
      : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
    if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
        !std::isfinite(y2)) {
      throw InvalidArgument("box coordinates must be finite");
    }
    if (x2 < x1 || y2 < y1) {
      throw InvalidArgument("box corners out of order: (" + std::to_string(x1) +
                            ", " + std::to_string(y1) + ", " +
                            std::to_string(x2) + ", " + std::to_string(y2) +
                            ")");
    }
  }

  /// Builds a box from its center and size.
  static Box from_center(double cx, double cy, double w, double h) {
    return Box(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
  }

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }

  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1_ + x2_); }
  double center_y() const { return 0.5 * (y1_ + y2_); }

  Box translated(double dx, double dy) const {
    return Box(x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy);
  }

  friend bool operator==(const Box&, const Box&) = default;
  // Lexicographic on (x1, y1, x2, y2); used for deterministic tie-breaking.
  friend auto operator<=>(const Box&, const Box&) = default;

 private:
  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 0.0;
  double y2_ = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << "(" << b.x1() << ", " << b.y1() << ", " << b.x2() << ", "
            << b.y2() << ")";
}

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

/// Intersection over union. Zero when the union has no area, so two
/// degenerate boxes never count as overlapping.
inline double iou_box(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Clamps every coordinate into [0, width] x [0, height].
inline Box clip_box(const Box& b, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvalidArgument("clip_box: width and height must be positive");
  }
  return Box(std::clamp(b.x1(), 0.0, width), std::clamp(b.y1(), 0.0, height),
             std::clamp(b.x2(), 0.0, width), std::clamp(b.y2(), 0.0, height));
}

}  // namespace rooftop
