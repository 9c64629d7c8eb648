#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdt/geometry.hpp"
#include "fdt/tensor.hpp"

namespace fdt {

/// Rectangle on the feature map, float corners. Feature element (i, j) sits at
/// continuous coordinate (x = j, y = i).
struct RoI {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  int batch_index = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
};

struct FeatureExtent {
  int width = 0;
  int height = 0;
};

enum class RoiMethod { Align, Pool };

struct RoiParams {
  int out_h = 3;
  int out_w = 3;
  /// Sample grid per bin (RoIAlign only).
  int samples_h = 2;
  int samples_w = 2;
};

/**
 * Maps an image-space box onto the feature map.
 *
 * Corners are divided by the stride (after subtracting `offset` pixels), clamped
 * to [0, extent], and any side shorter than one feature cell is widened to 1.0
 * around its center. Throws std::out_of_range for a box that misses the map.
 */
RoI map_box_to_roi(const BoundingBox& box, int feature_stride, FeatureExtent extent, double offset = 0.0);

/// Maps every box; a box that misses the map entirely collapses onto the
/// nearest border cell instead of throwing.
std::vector<RoI> boxes_to_rois(std::span<const BoundingBox> boxes, int feature_stride, FeatureExtent extent,
                               double offset = 0.0);

/// Precomputed bilinear footprint of one continuous point.
struct BilinearTap {
  int x0, x1, y0, y1;
  double wx0, wx1, wy0, wy1;
};

/// Neighbors are floor(p) and floor(p) + 1, the latter clamped to the last
/// row/column, so the four weights always sum to one.
BilinearTap bilinear_tap(double x, double y, int width, int height);

/// Interpolated value of featmap[n, c] at (x, y); requires 0 <= x <= W-1 and
/// 0 <= y <= H-1, throws std::out_of_range otherwise.
template <typename T>
T bilinear_sample(const Tensor<T>& featmap, int n, int c, double x, double y);

struct SamplePoint {
  double x = 0, y = 0;
};

/// Backward provenance for one pooled RoI.
struct RoiTrace {
  int batch_index = 0;
  /// RoIAlign: sample points of every bin, bin-major (s_h * s_w per bin).
  std::vector<SamplePoint> points;
  /// Per (channel, bin): RoIAlign -> index into `points`; RoIPool -> y * W + x of the max cell.
  std::vector<std::int32_t> winner;
};

template <typename T>
struct PooledFeature {
  RoiMethod method = RoiMethod::Align;
  RoiParams params;
  /// rois x C x out_h x out_w
  Tensor<T> values;
  std::vector<RoiTrace> traces;
  std::vector<int> featmap_shape;
};

/// Max-RoIAlign. Each RoI is split into out_h x out_w equal float bins; each
/// bin is sampled at the centers of a samples_h x samples_w sub-grid (points
/// clamped into the map) and reduced by max, first sample winning ties.
template <typename T>
PooledFeature<T> roialign_forward(const Tensor<T>& featmap, std::span<const RoI> rois, const RoiParams& params);

template <typename T>
Tensor<T> roialign_backward(const Tensor<T>& grad_pooled, const PooledFeature<T>& provenance,
                            const std::vector<int>& featmap_shape);

/// RoIPool: corners rounded to the nearest integer, the RoI covers cells
/// [x1, x2) x [y1, y2), bins are max-pooled over whole cells. A bin left with
/// no cells takes the single nearest cell.
template <typename T>
PooledFeature<T> roipool_forward(const Tensor<T>& featmap, std::span<const RoI> rois, const RoiParams& params);

template <typename T>
Tensor<T> roipool_backward(const Tensor<T>& grad_pooled, const PooledFeature<T>& provenance,
                           const std::vector<int>& featmap_shape);

template <typename T>
PooledFeature<T> roi_forward(RoiMethod method, const Tensor<T>& featmap, std::span<const RoI> rois,
                             const RoiParams& params) {
  return method == RoiMethod::Align ? roialign_forward(featmap, rois, params) : roipool_forward(featmap, rois, params);
}

template <typename T>
Tensor<T> roi_backward(const Tensor<T>& grad_pooled, const PooledFeature<T>& provenance,
                       const std::vector<int>& featmap_shape) {
  return provenance.method == RoiMethod::Align ? roialign_backward(grad_pooled, provenance, featmap_shape)
                                               : roipool_backward(grad_pooled, provenance, featmap_shape);
}

}  // namespace fdt
