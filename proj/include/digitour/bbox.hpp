#pragma once

#include <algorithm>

namespace digitour {

// Continuous pixel-edge coordinates: pixel (i, j) covers [i, i+1) x [j, j+1).
// x grows rightward, y downward.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  BBox clamped(double w, double h) const {
    return {std::clamp(x_min, 0.0, w), std::clamp(y_min, 0.0, h),
            std::clamp(x_max, 0.0, w), std::clamp(y_max, 0.0, h)};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

}  // namespace digitour
