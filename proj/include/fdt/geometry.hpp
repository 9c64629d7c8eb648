#pragma once

#include <string>

namespace fdt {

/// Axis-aligned box in image pixels: top-left corner plus extent.
struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }

  static BoundingBox from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  bool operator==(const BoundingBox&) const = default;
};

std::string to_string(const BoundingBox& b);

/// Intersection over union in [0, 1]; 0 when either box is degenerate.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Euclidean distance between box centers.
double center_error(const BoundingBox& pred, const BoundingBox& gt);

/// Shrinks the box to at most the frame extent (and at least min_size), then
/// shifts it to lie fully inside [0, width] x [0, height].
BoundingBox clip_to_frame(const BoundingBox& b, double width, double height, double min_size = 4.0);

/// True when the box has some overlap with the frame.
bool overlaps_frame(const BoundingBox& b, double width, double height);

}  // namespace fdt
