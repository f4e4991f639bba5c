#pragma once

#include <algorithm>
#include <string>

#include "pcbdet/common.hpp"

namespace pcbdet {

// Axis-aligned box in pixel coordinates, origin top-left, half-open
// [x_min, x_max) x [y_min, y_max).
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x_min + x_max); }
  double cy() const { return 0.5 * (y_min + y_max); }

  bool valid() const { return x_min < x_max && y_min < y_max; }

  Box clipped(double w, double h) const {
    return Box{std::max(0.0, std::min(x_min, w)),
               std::max(0.0, std::min(y_min, h)),
               std::max(0.0, std::min(x_max, w)),
               std::max(0.0, std::min(y_max, h))};
  }

  std::string str() const {
    return "(" + std::to_string(x_min) + "," + std::to_string(y_min) + "," +
           std::to_string(x_max) + "," + std::to_string(y_max) + ")";
  }
};

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

// One predicted box with class and confidence.
struct Detection {
  Box box;
  int class_id = 0;
  double score = 0.0;
};

}  // namespace pcbdet
