#pragma once

#include <cmath>
#include <numbers>

namespace tdi {

/// Ideal pinhole looking down +z with +y up. Pixel (0,0) is the top-left corner.
/// Pixel centres are expressed on the z = 1 tangent plane and are exactly
/// antisymmetric about the optical axis, so a horizontal flip of the image is
/// an exact negation of the x tangent.
class PinholeCamera {
 public:
  PinholeCamera(double fov_deg, int width, int height)
      : width_(width),
        height_(height),
        tan_half_x_(std::tan(fov_deg * std::numbers::pi / 360.0)),
        tan_half_y_(tan_half_x_ * height / width) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double tan_half_x() const { return tan_half_x_; }
  double tan_half_y() const { return tan_half_y_; }

  double tangent_x(int col) const { return static_cast<double>(2 * col + 1 - width_) / width_ * tan_half_x_; }
  double tangent_y(int row) const { return static_cast<double>(height_ - 1 - 2 * row) / height_ * tan_half_y_; }

 private:
  int width_;
  int height_;
  double tan_half_x_;
  double tan_half_y_;
};

}  // namespace tdi
