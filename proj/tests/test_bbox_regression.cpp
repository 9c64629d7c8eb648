#include <doctest.h>

#include <random>

#include "fdt/bbox_regression.hpp"
#include "fdt/sampling.hpp"

using namespace fdt;

TEST_CASE("deltas and their application are inverse") {
  const BoundingBox a{10, 20, 30, 40}, b{14.5, 18, 25, 52};
  const BoxDeltas d = box_deltas(a, b);
  const BoundingBox back = apply_deltas(a, d);
  CHECK(back.x == doctest::Approx(b.x));
  CHECK(back.y == doctest::Approx(b.y));
  CHECK(back.w == doctest::Approx(b.w));
  CHECK(back.h == doctest::Approx(b.h));
  const BoxDeltas zero = box_deltas(a, a);
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("regressor recovers a planted linear relation") {
  std::mt19937_64 rng(8);
  const BoundingBox gt{50, 40, 30, 24};
  const auto boxes = draw_candidates(gt, 300, JitterParams{0.3, 1.05, 1.5}, 200, 200, rng);

  // Features: a fixed invertible mix of the true deltas plus an irrelevant column.
  const double mix[4][4] = {{1, 0.5, 0, 0}, {0, 1, -0.3, 0}, {0.2, 0, 1, 0}, {0, 0, 0.4, 1}};
  std::normal_distribution<double> noise(0.0, 1.0);
  Tensor<double> feats({static_cast<int>(boxes.size()), 5});
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BoxDeltas t = box_deltas(boxes[i], gt);
    for (int r = 0; r < 4; ++r) {
      double s = 0;
      for (int c = 0; c < 4; ++c) s += mix[r][c] * t[static_cast<std::size_t>(c)];
      feats[i * 5 + static_cast<std::size_t>(r)] = s;
    }
    feats[i * 5 + 4] = noise(rng);
  }

  BBoxRegressorConfig cfg;
  cfg.ridge_lambda = 1e-8;
  cfg.min_iou = 0.0;
  const BBoxRegressor reg = BBoxRegressor::fit(feats, boxes, gt, cfg);
  REQUIRE(reg.fitted());
  CHECK(reg.samples_used() == static_cast<int>(boxes.size()));
  for (std::size_t i = 0; i < 20; ++i) {
    const std::span<const double> row(feats.values().data() + i * 5, 5);
    const BoundingBox out = reg.refine(row, boxes[i]);
    CHECK(out.x == doctest::Approx(gt.x).epsilon(1e-5));
    CHECK(out.y == doctest::Approx(gt.y).epsilon(1e-5));
    CHECK(out.w == doctest::Approx(gt.w).epsilon(1e-5));
    CHECK(out.h == doctest::Approx(gt.h).epsilon(1e-5));
  }
}

TEST_CASE("a near-constant feature cannot dominate the prediction") {
  std::mt19937_64 rng(9);
  const BoundingBox gt{50, 40, 30, 24};
  const auto boxes = draw_candidates(gt, 100, JitterParams{0.3, 1.05, 1.5}, 200, 200, rng);
  std::normal_distribution<double> n01(0.0, 1.0);
  Tensor<double> feats({100, 3});
  for (std::size_t i = 0; i < feats.size(); i += 3) {
    feats[i] = n01(rng);
    feats[i + 1] = n01(rng);
    feats[i + 2] = 1e-9 * n01(rng);
  }
  BBoxRegressorConfig cfg;
  cfg.min_iou = 0.0;
  const BBoxRegressor reg = BBoxRegressor::fit(feats, boxes, gt, cfg);
  REQUIRE(reg.fitted());
  // A later frame moves the dead feature by an amount tiny next to the live ones.
  const std::vector<double> probe{0.0, 0.0, 1e-3};
  const BoxDeltas d = reg.predict(std::span<const double>(probe));
  for (double v : d) CHECK(std::abs(v) < 0.5);
}

TEST_CASE("regressor stays unfitted without enough overlapping boxes") {
  const BoundingBox gt{50, 40, 30, 24};
  const std::vector<BoundingBox> far{{0, 0, 10, 10}, {150, 150, 20, 20}, {100, 0, 10, 10}, {0, 100, 10, 10},
                                     {120, 120, 5, 5}};
  const Tensor<double> feats({5, 2}, 1.0);
  const BBoxRegressor reg = BBoxRegressor::fit(feats, far, gt);
  CHECK_FALSE(reg.fitted());
  const std::vector<double> row{1.0, 2.0};
  CHECK(reg.refine(std::span<const double>(row), far[0]) == far[0]);
  CHECK_THROWS_AS(BBoxRegressor::fit(Tensor<double>({3, 2}), far, gt), ShapeError);
}
