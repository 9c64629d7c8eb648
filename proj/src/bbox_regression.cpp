#include "fdt/bbox_regression.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace fdt {

BoxDeltas box_deltas(const BoundingBox& from, const BoundingBox& to) {
  return {(to.cx() - from.cx()) / from.w, (to.cy() - from.cy()) / from.h, std::log(to.w / from.w),
          std::log(to.h / from.h)};
}

BoundingBox apply_deltas(const BoundingBox& box, const BoxDeltas& d) {
  const double w = box.w * std::exp(d[2]), h = box.h * std::exp(d[3]);
  return BoundingBox::from_center(box.cx() + d[0] * box.w, box.cy() + d[1] * box.h, w, h);
}

template <typename T>
BBoxRegressor BBoxRegressor::fit(const Tensor<T>& features, std::span<const BoundingBox> boxes, const BoundingBox& gt,
                                 const BBoxRegressorConfig& cfg) {
  BBoxRegressor r;
  if (boxes.empty() || features.empty()) return r;
  require_shape(static_cast<std::size_t>(features.dim(0)) == boxes.size(),
                "bbox regression: " + std::to_string(boxes.size()) + " boxes for " +
                    std::to_string(features.dim(0)) + " feature rows");
  const Eigen::Index d = static_cast<Eigen::Index>(features.row_size());

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (iou(boxes[i], gt) > cfg.min_iou) rows.push_back(i);
  if (static_cast<int>(rows.size()) < cfg.min_samples) return r;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());

  Eigen::MatrixXd phi(n, d);
  Eigen::MatrixXd targets(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T* src = features.data() + rows[static_cast<std::size_t>(i)] * features.row_size();
    for (Eigen::Index j = 0; j < d; ++j) phi(i, j) = static_cast<double>(src[j]);
    const BoxDeltas t = box_deltas(boxes[rows[static_cast<std::size_t>(i)]], gt);
    for (int k = 0; k < 4; ++k) targets(i, k) = t[static_cast<std::size_t>(k)];
  }

  r.mean_ = phi.colwise().mean().transpose();
  phi.rowwise() -= r.mean_.transpose();
  // Features that barely move on the fitting set must not be blown up: a
  // later frame can vary them far more. Floor each std at a fraction of the
  // typical one.
  Eigen::VectorXd sd(d);
  for (Eigen::Index j = 0; j < d; ++j) sd(j) = std::sqrt(phi.col(j).squaredNorm() / static_cast<double>(n));
  const double floor = std::max(cfg.std_floor * std::sqrt(sd.squaredNorm() / static_cast<double>(d)), 1e-12);
  r.inv_std_ = sd.cwiseMax(floor).cwiseInverse();
  phi = phi * r.inv_std_.asDiagonal();

  r.bias_ = targets.colwise().mean().transpose();
  targets.rowwise() -= r.bias_.transpose();

  // (phi' phi + lambda I) W = phi' t, solved in whichever of the primal or dual
  // form has the smaller system.
  const double lambda = cfg.ridge_lambda;
  if (n < d) {
    Eigen::MatrixXd gram = phi * phi.transpose();
    gram.diagonal().array() += lambda;
    r.weights_ = phi.transpose() * gram.ldlt().solve(targets);
  } else {
    Eigen::MatrixXd cov = phi.transpose() * phi;
    cov.diagonal().array() += lambda;
    r.weights_ = cov.ldlt().solve(phi.transpose() * targets);
  }
  r.fitted_ = true;
  r.samples_used_ = static_cast<int>(n);
  return r;
}

namespace {

template <typename T>
BoxDeltas predict_impl(const Eigen::VectorXd& mean, const Eigen::VectorXd& inv_std, const Eigen::MatrixXd& w,
                       const Eigen::Vector4d& b, std::span<const T> feature) {
  require_shape(static_cast<Eigen::Index>(feature.size()) == mean.size(),
                "bbox regression feature has " + std::to_string(feature.size()) + " entries, expected " +
                    std::to_string(mean.size()));
  Eigen::VectorXd x(mean.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    x(j) = (static_cast<double>(feature[static_cast<std::size_t>(j)]) - mean(j)) * inv_std(j);
  const Eigen::Vector4d out = w.transpose() * x + b;
  return {out(0), out(1), out(2), out(3)};
}

}  // namespace

BoxDeltas BBoxRegressor::predict(std::span<const float> feature) const {
  if (!fitted_) return {0, 0, 0, 0};
  return predict_impl(mean_, inv_std_, weights_, bias_, feature);
}

BoxDeltas BBoxRegressor::predict(std::span<const double> feature) const {
  if (!fitted_) return {0, 0, 0, 0};
  return predict_impl(mean_, inv_std_, weights_, bias_, feature);
}

template <typename T>
BoundingBox BBoxRegressor::refine(std::span<const T> feature, const BoundingBox& box, double frame_w,
                                  double frame_h) const {
  if (!fitted_) return box;
  BoundingBox out = apply_deltas(box, predict(feature));
  if (frame_w > 0 && frame_h > 0) out = clip_to_frame(out, frame_w, frame_h);
  return out;
}

template BBoxRegressor BBoxRegressor::fit(const Tensor<float>&, std::span<const BoundingBox>, const BoundingBox&,
                                          const BBoxRegressorConfig&);
template BBoxRegressor BBoxRegressor::fit(const Tensor<double>&, std::span<const BoundingBox>, const BoundingBox&,
                                          const BBoxRegressorConfig&);
template BoundingBox BBoxRegressor::refine(std::span<const float>, const BoundingBox&, double, double) const;
template BoundingBox BBoxRegressor::refine(std::span<const double>, const BoundingBox&, double, double) const;

}  // namespace fdt
