#include "fdt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fdt {

std::string to_string(const BoundingBox& b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "(%.3f, %.3f, %.3f, %.3f)", b.x, b.y, b.w, b.h);
  return buf;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.valid() || !b.valid()) return 0.0;
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return std::clamp(inter / (a.area() + b.area() - inter), 0.0, 1.0);
}

double center_error(const BoundingBox& pred, const BoundingBox& gt) {
  return std::hypot(pred.cx() - gt.cx(), pred.cy() - gt.cy());
}

BoundingBox clip_to_frame(const BoundingBox& b, double width, double height, double min_size) {
  BoundingBox r = b;
  r.w = std::clamp(r.w, std::min(min_size, width), width);
  r.h = std::clamp(r.h, std::min(min_size, height), height);
  // keep the center when resizing
  if (r.w != b.w) r.x = b.cx() - 0.5 * r.w;
  if (r.h != b.h) r.y = b.cy() - 0.5 * r.h;
  r.x = std::clamp(r.x, 0.0, width - r.w);
  r.y = std::clamp(r.y, 0.0, height - r.h);
  return r;
}

bool overlaps_frame(const BoundingBox& b, double width, double height) {
  return b.valid() && b.right() > 0 && b.bottom() > 0 && b.x < width && b.y < height;
}

}  // namespace fdt
