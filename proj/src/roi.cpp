#include "fdt/roi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fdt {

namespace {

void widen_to_min(double& lo, double& hi, double limit) {
  if (hi - lo >= 1.0 || limit < 1.0) return;
  const double c = 0.5 * (lo + hi);
  lo = std::clamp(c - 0.5, 0.0, limit - 1.0);
  hi = lo + 1.0;
}

void check_featmap(const std::vector<int>& shape) {
  require_shape(shape.size() == 4, "feature map must be NCHW, got " + shape_to_string(shape));
}

void check_params(const RoiParams& p) {
  if (p.out_h < 1 || p.out_w < 1) throw std::invalid_argument("roi output size must be >= 1");
  if (p.samples_h < 1 || p.samples_w < 1) throw std::invalid_argument("roi samples per bin must be >= 1");
}

void check_roi(const RoI& r, const std::vector<int>& shape) {
  if (r.batch_index < 0 || r.batch_index >= shape[0])
    throw std::out_of_range("roi batch index " + std::to_string(r.batch_index) + " outside feature map batch");
  if (!(r.x2 >= r.x1) || !(r.y2 >= r.y1)) throw std::invalid_argument("roi has negative extent");
}

}  // namespace

RoI map_box_to_roi(const BoundingBox& box, int feature_stride, FeatureExtent extent, double offset) {
  if (feature_stride < 1) throw std::invalid_argument("feature stride must be >= 1");
  if (!box.valid()) throw std::invalid_argument("box " + to_string(box) + " has non-positive extent");
  const double s = feature_stride;
  RoI r{(box.x - offset) / s, (box.y - offset) / s, (box.right() - offset) / s, (box.bottom() - offset) / s, 0};
  const double W = extent.width, H = extent.height;
  if (r.x2 <= 0 || r.y2 <= 0 || r.x1 >= W || r.y1 >= H)
    throw std::out_of_range("box " + to_string(box) + " lies outside the feature map");
  r.x1 = std::clamp(r.x1, 0.0, W);
  r.x2 = std::clamp(r.x2, 0.0, W);
  r.y1 = std::clamp(r.y1, 0.0, H);
  r.y2 = std::clamp(r.y2, 0.0, H);
  widen_to_min(r.x1, r.x2, W);
  widen_to_min(r.y1, r.y2, H);
  return r;
}

std::vector<RoI> boxes_to_rois(std::span<const BoundingBox> boxes, int feature_stride, FeatureExtent extent,
                               double offset) {
  std::vector<RoI> out;
  out.reserve(boxes.size());
  for (const BoundingBox& b : boxes) {
    try {
      out.push_back(map_box_to_roi(b, feature_stride, extent, offset));
    } catch (const std::out_of_range&) {
      const double s = feature_stride;
      const double cx = std::clamp((b.cx() - offset) / s, 0.5, extent.width - 0.5);
      const double cy = std::clamp((b.cy() - offset) / s, 0.5, extent.height - 0.5);
      out.push_back({cx - 0.5, cy - 0.5, cx + 0.5, cy + 0.5, 0});
    }
  }
  return out;
}

BilinearTap bilinear_tap(double x, double y, int width, int height) {
  BilinearTap t{};
  t.x0 = static_cast<int>(std::floor(x));
  t.y0 = static_cast<int>(std::floor(y));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  const double fx = x - t.x0, fy = y - t.y0;
  t.wx0 = 1.0 - fx;
  t.wx1 = fx;
  t.wy0 = 1.0 - fy;
  t.wy1 = fy;
  return t;
}

template <typename T>
T bilinear_sample(const Tensor<T>& featmap, int n, int c, double x, double y) {
  check_featmap(featmap.shape());
  const int H = featmap.dim(2), W = featmap.dim(3);
  if (!(x >= 0 && x <= W - 1 && y >= 0 && y <= H - 1))
    throw std::out_of_range("sample point (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") outside feature map " + featmap.shape_str());
  const BilinearTap t = bilinear_tap(x, y, W, H);
  const double v = t.wy0 * (t.wx0 * featmap.at(n, c, t.y0, t.x0) + t.wx1 * featmap.at(n, c, t.y0, t.x1)) +
                   t.wy1 * (t.wx0 * featmap.at(n, c, t.y1, t.x0) + t.wx1 * featmap.at(n, c, t.y1, t.x1));
  return static_cast<T>(v);
}

// ---------------------------------------------------------------------------

template <typename T>
PooledFeature<T> roialign_forward(const Tensor<T>& featmap, std::span<const RoI> rois, const RoiParams& params) {
  check_featmap(featmap.shape());
  check_params(params);
  const int C = featmap.dim(1), H = featmap.dim(2), W = featmap.dim(3);
  const int bins = params.out_h * params.out_w;
  const int per_bin = params.samples_h * params.samples_w;
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  PooledFeature<T> out;
  out.method = RoiMethod::Align;
  out.params = params;
  out.featmap_shape = featmap.shape();
  if (rois.empty()) return out;
  out.values = Tensor<T>({static_cast<int>(rois.size()), C, params.out_h, params.out_w});
  out.traces.resize(rois.size());

  std::vector<BilinearTap> taps(static_cast<std::size_t>(bins) * per_bin);
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const RoI& roi = rois[r];
    check_roi(roi, featmap.shape());
    RoiTrace& trace = out.traces[r];
    trace.batch_index = roi.batch_index;
    trace.points.resize(taps.size());
    trace.winner.resize(static_cast<std::size_t>(C) * bins);

    const double bin_w = roi.width() / params.out_w, bin_h = roi.height() / params.out_h;
    std::size_t k = 0;
    for (int by = 0; by < params.out_h; ++by)
      for (int bx = 0; bx < params.out_w; ++bx)
        for (int sy = 0; sy < params.samples_h; ++sy)
          for (int sx = 0; sx < params.samples_w; ++sx, ++k) {
            double y = roi.y1 + (by + (sy + 0.5) / params.samples_h) * bin_h;
            double x = roi.x1 + (bx + (sx + 0.5) / params.samples_w) * bin_w;
            x = std::clamp(x, 0.0, static_cast<double>(W - 1));
            y = std::clamp(y, 0.0, static_cast<double>(H - 1));
            trace.points[k] = {x, y};
            taps[k] = bilinear_tap(x, y, W, H);
          }

    const T* base = featmap.data() + static_cast<std::size_t>(roi.batch_index) * C * plane;
    T* dst = out.values.data() + r * out.values.row_size();
    for (int c = 0; c < C; ++c) {
      const T* f = base + c * plane;
      for (int b = 0; b < bins; ++b) {
        double best = 0;
        int best_k = -1;
        for (int s = 0; s < per_bin; ++s) {
          const int kk = b * per_bin + s;
          const BilinearTap& t = taps[static_cast<std::size_t>(kk)];
          const double v = t.wy0 * (t.wx0 * f[t.y0 * W + t.x0] + t.wx1 * f[t.y0 * W + t.x1]) +
                           t.wy1 * (t.wx0 * f[t.y1 * W + t.x0] + t.wx1 * f[t.y1 * W + t.x1]);
          if (best_k < 0 || v > best) {
            best = v;
            best_k = kk;
          }
        }
        dst[c * bins + b] = static_cast<T>(best);
        trace.winner[static_cast<std::size_t>(c) * bins + b] = best_k;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> roialign_backward(const Tensor<T>& grad_pooled, const PooledFeature<T>& provenance,
                            const std::vector<int>& featmap_shape) {
  check_featmap(featmap_shape);
  if (provenance.method != RoiMethod::Align) throw std::invalid_argument("provenance is not from RoIAlign");
  if (featmap_shape != provenance.featmap_shape)
    throw ShapeError("roialign backward: feature map shape " + shape_to_string(featmap_shape) +
                     " does not match forward " + shape_to_string(provenance.featmap_shape));
  Tensor<T> grad(featmap_shape);
  if (provenance.traces.empty()) return grad;
  require_shape(grad_pooled.shape() == provenance.values.shape(),
                "roialign backward: grad " + grad_pooled.shape_str() + " vs pooled " + provenance.values.shape_str());
  const int C = featmap_shape[1], H = featmap_shape[2], W = featmap_shape[3];
  const int bins = provenance.params.out_h * provenance.params.out_w;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (std::size_t r = 0; r < provenance.traces.size(); ++r) {
    const RoiTrace& trace = provenance.traces[r];
    const T* g = grad_pooled.data() + r * grad_pooled.row_size();
    T* base = grad.data() + static_cast<std::size_t>(trace.batch_index) * C * plane;
    for (int c = 0; c < C; ++c) {
      T* f = base + c * plane;
      for (int b = 0; b < bins; ++b) {
        const double d = g[c * bins + b];
        if (d == 0) continue;
        const SamplePoint& p = trace.points[static_cast<std::size_t>(trace.winner[static_cast<std::size_t>(c) * bins + b])];
        const BilinearTap t = bilinear_tap(p.x, p.y, W, H);
        f[t.y0 * W + t.x0] += static_cast<T>(t.wx0 * t.wy0 * d);
        f[t.y0 * W + t.x1] += static_cast<T>(t.wx1 * t.wy0 * d);
        f[t.y1 * W + t.x0] += static_cast<T>(t.wx0 * t.wy1 * d);
        f[t.y1 * W + t.x1] += static_cast<T>(t.wx1 * t.wy1 * d);
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------

namespace {

struct CellRange {
  int lo, hi;  // [lo, hi)
};

/// Whole-cell span of bin b out of n along one axis of a rounded RoI.
CellRange pool_bin(int start, int length, int b, int n, int limit) {
  const double size = static_cast<double>(length) / n;
  int lo = start + static_cast<int>(std::floor(b * size));
  int hi = start + static_cast<int>(std::ceil((b + 1) * size));
  lo = std::clamp(lo, 0, limit);
  hi = std::clamp(hi, 0, limit);
  if (hi <= lo) {
    const int nearest = std::clamp(static_cast<int>(std::floor(start + (b + 0.5) * size)), 0, limit - 1);
    return {nearest, nearest + 1};
  }
  return {lo, hi};
}

}  // namespace

template <typename T>
PooledFeature<T> roipool_forward(const Tensor<T>& featmap, std::span<const RoI> rois, const RoiParams& params) {
  check_featmap(featmap.shape());
  check_params(params);
  const int C = featmap.dim(1), H = featmap.dim(2), W = featmap.dim(3);
  const int bins = params.out_h * params.out_w;
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  PooledFeature<T> out;
  out.method = RoiMethod::Pool;
  out.params = params;
  out.featmap_shape = featmap.shape();
  if (rois.empty()) return out;
  out.values = Tensor<T>({static_cast<int>(rois.size()), C, params.out_h, params.out_w});
  out.traces.resize(rois.size());

  std::vector<CellRange> rows(static_cast<std::size_t>(params.out_h)), cols(static_cast<std::size_t>(params.out_w));
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const RoI& roi = rois[r];
    check_roi(roi, featmap.shape());
    const int x1 = static_cast<int>(std::round(roi.x1)), x2 = static_cast<int>(std::round(roi.x2));
    const int y1 = static_cast<int>(std::round(roi.y1)), y2 = static_cast<int>(std::round(roi.y2));
    const int len_x = std::max(x2 - x1, 1), len_y = std::max(y2 - y1, 1);
    for (int b = 0; b < params.out_h; ++b) rows[static_cast<std::size_t>(b)] = pool_bin(y1, len_y, b, params.out_h, H);
    for (int b = 0; b < params.out_w; ++b) cols[static_cast<std::size_t>(b)] = pool_bin(x1, len_x, b, params.out_w, W);

    RoiTrace& trace = out.traces[r];
    trace.batch_index = roi.batch_index;
    trace.winner.resize(static_cast<std::size_t>(C) * bins);
    const T* base = featmap.data() + static_cast<std::size_t>(roi.batch_index) * C * plane;
    T* dst = out.values.data() + r * out.values.row_size();
    for (int c = 0; c < C; ++c) {
      const T* f = base + c * plane;
      for (int by = 0; by < params.out_h; ++by)
        for (int bx = 0; bx < params.out_w; ++bx) {
          const CellRange ry = rows[static_cast<std::size_t>(by)], rx = cols[static_cast<std::size_t>(bx)];
          int best = ry.lo * W + rx.lo;
          for (int y = ry.lo; y < ry.hi; ++y)
            for (int x = rx.lo; x < rx.hi; ++x)
              if (f[y * W + x] > f[best]) best = y * W + x;
          const int b = by * params.out_w + bx;
          dst[c * bins + b] = f[best];
          trace.winner[static_cast<std::size_t>(c) * bins + b] = best;
        }
    }
  }
  return out;
}

template <typename T>
Tensor<T> roipool_backward(const Tensor<T>& grad_pooled, const PooledFeature<T>& provenance,
                           const std::vector<int>& featmap_shape) {
  check_featmap(featmap_shape);
  if (provenance.method != RoiMethod::Pool) throw std::invalid_argument("provenance is not from RoIPool");
  if (featmap_shape != provenance.featmap_shape)
    throw ShapeError("roipool backward: feature map shape " + shape_to_string(featmap_shape) +
                     " does not match forward " + shape_to_string(provenance.featmap_shape));
  Tensor<T> grad(featmap_shape);
  if (provenance.traces.empty()) return grad;
  require_shape(grad_pooled.shape() == provenance.values.shape(), "roipool backward: grad shape mismatch");
  const int C = featmap_shape[1];
  const std::size_t plane = static_cast<std::size_t>(featmap_shape[2]) * featmap_shape[3];
  const int bins = provenance.params.out_h * provenance.params.out_w;
  for (std::size_t r = 0; r < provenance.traces.size(); ++r) {
    const RoiTrace& trace = provenance.traces[r];
    const T* g = grad_pooled.data() + r * grad_pooled.row_size();
    T* base = grad.data() + static_cast<std::size_t>(trace.batch_index) * C * plane;
    for (int c = 0; c < C; ++c)
      for (int b = 0; b < bins; ++b)
        base[c * plane + static_cast<std::size_t>(trace.winner[static_cast<std::size_t>(c) * bins + b])] +=
            g[c * bins + b];
  }
  return grad;
}

#define FDT_INSTANTIATE_ROI(T)                                                                                  \
  template T bilinear_sample<T>(const Tensor<T>&, int, int, double, double);                                   \
  template PooledFeature<T> roialign_forward<T>(const Tensor<T>&, std::span<const RoI>, const RoiParams&);     \
  template Tensor<T> roialign_backward<T>(const Tensor<T>&, const PooledFeature<T>&, const std::vector<int>&); \
  template PooledFeature<T> roipool_forward<T>(const Tensor<T>&, std::span<const RoI>, const RoiParams&);      \
  template Tensor<T> roipool_backward<T>(const Tensor<T>&, const PooledFeature<T>&, const std::vector<int>&);

FDT_INSTANTIATE_ROI(float)
FDT_INSTANTIATE_ROI(double)

}  // namespace fdt
