#pragma once

#include <Eigen/Core>
#include <array>
#include <span>

#include "fdt/geometry.hpp"
#include "fdt/tensor.hpp"

namespace fdt {

/// (dx, dy, dw, dh): center shift in units of the source size, log size ratio.
using BoxDeltas = std::array<double, 4>;

BoxDeltas box_deltas(const BoundingBox& from, const BoundingBox& to);
BoundingBox apply_deltas(const BoundingBox& box, const BoxDeltas& d);

struct BBoxRegressorConfig {
  double ridge_lambda = 1000.0;
  /// Only samples overlapping the ground truth by more than this train the regressor.
  double min_iou = 0.6;
  int min_samples = 4;
  /// Per-feature std floor, as a fraction of the RMS std over all features.
  double std_floor = 0.1;
};

/**
 * Linear box refinement on pooled conv features. Features are standardized
 * with the statistics of the fitting set; the intercept is the mean target
 * and is not penalized.
 */
class BBoxRegressor {
 public:
  BBoxRegressor() = default;

  /// Ridge fit of deltas(box -> gt) on the rows of `features` (n x d). Returns an
  /// unfitted regressor when fewer than min_samples boxes qualify.
  template <typename T>
  static BBoxRegressor fit(const Tensor<T>& features, std::span<const BoundingBox> boxes, const BoundingBox& gt,
                           const BBoxRegressorConfig& cfg = {});

  bool fitted() const { return fitted_; }
  int samples_used() const { return samples_used_; }

  BoxDeltas predict(std::span<const float> feature) const;
  BoxDeltas predict(std::span<const double> feature) const;

  /// Applies the predicted deltas; identity when unfitted. Clipped to the
  /// frame when frame_w and frame_h are positive.
  template <typename T>
  BoundingBox refine(std::span<const T> feature, const BoundingBox& box, double frame_w = 0,
                     double frame_h = 0) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::Vector4d& bias() const { return bias_; }

 private:
  bool fitted_ = false;
  int samples_used_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd inv_std_;
  Eigen::MatrixXd weights_;  // d x 4
  Eigen::Vector4d bias_ = Eigen::Vector4d::Zero();
};

}  // namespace fdt
