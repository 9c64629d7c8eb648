#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fdt/eval.hpp"
#include "fdt/sampling.hpp"

using namespace fdt;

namespace {

std::vector<BoundingBox> shifted(const std::vector<BoundingBox>& gt, const std::vector<double>& dx) {
  std::vector<BoundingBox> out = gt;
  for (std::size_t i = 0; i < dx.size(); ++i) out[i + 1].x += dx[i];
  return out;
}

}  // namespace

TEST_CASE("center error fixture gives the expected precision") {
  const std::vector<BoundingBox> gt(5, BoundingBox{100, 100, 40, 40});
  const auto pred = shifted(gt, {0, 10, 25, 60});
  const EvalResult r = evaluate_ope(pred, gt);
  CHECK(r.frames() == 4);
  CHECK(r.center_errors == std::vector<double>{0, 10, 25, 60});
  CHECK(r.precision_at_20 == 0.5);
  CHECK(r.precision[0] == 0.25);
  CHECK(r.precision[10] == 0.5);
  CHECK(r.precision[25] == 0.75);
  CHECK(r.precision[50] == 0.75);
}

TEST_CASE("center error is euclidean") {
  const std::vector<BoundingBox> gt{{0, 0, 10, 10}, {0, 0, 10, 10}};
  const std::vector<BoundingBox> pred{{0, 0, 10, 10}, {3, 4, 10, 10}};
  CHECK(evaluate_ope(pred, gt).center_errors.front() == doctest::Approx(5.0));
}

TEST_CASE("perfect and disjoint trackers bound the curves") {
  const std::vector<BoundingBox> gt{{0, 0, 10, 10}, {5, 5, 10, 20}, {7, 1, 12, 9}};
  const EvalResult perfect = evaluate_ope(gt, gt);
  CHECK(perfect.precision_at_20 == 1.0);
  // IoU 1 clears every threshold but the last (strictly greater than 1).
  CHECK(perfect.auc == doctest::Approx(20.0 / 21.0));
  CHECK(perfect.success.back() == 0.0);

  std::vector<BoundingBox> far = gt;
  for (auto& b : far) b.x += 500;
  const EvalResult none = evaluate_ope(far, gt);
  CHECK(none.auc == 0.0);
  CHECK(none.precision_at_20 == 0.0);
}

TEST_CASE("curves agree with brute-force counting") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(0, 100), size(5, 40);
  std::vector<BoundingBox> gt, pred;
  for (int i = 0; i < 200; ++i) {
    gt.push_back({pos(rng), pos(rng), size(rng), size(rng)});
    pred.push_back({gt.back().x + pos(rng) / 4 - 12, gt.back().y + pos(rng) / 4 - 12, size(rng), size(rng)});
  }
  const EvalResult r = evaluate_ope(pred, gt);
  REQUIRE(r.precision.size() == kPrecisionThresholds);
  REQUIRE(r.success.size() == kSuccessThresholds);
  for (int t = 0; t < kPrecisionThresholds; ++t) {
    int n = 0;
    for (std::size_t i = 1; i < gt.size(); ++i) n += center_error(pred[i], gt[i]) <= t;
    CHECK(r.precision[static_cast<std::size_t>(t)] == doctest::Approx(n / 199.0));
  }
  double auc = 0;
  for (int k = 0; k < kSuccessThresholds; ++k) {
    int n = 0;
    for (std::size_t i = 1; i < gt.size(); ++i) n += iou(pred[i], gt[i]) > k * 0.05;
    CHECK(r.success[static_cast<std::size_t>(k)] == doctest::Approx(n / 199.0));
    auc += n / 199.0;
  }
  CHECK(r.auc == doctest::Approx(auc / kSuccessThresholds));
  CHECK(std::is_sorted(r.precision.begin(), r.precision.end()));
  CHECK(std::is_sorted(r.success.rbegin(), r.success.rend()));
}

TEST_CASE("scores are invariant to permuting the scored frames") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 50);
  std::vector<BoundingBox> gt, pred;
  for (int i = 0; i < 30; ++i) {
    gt.push_back({u(rng), u(rng), 20, 20});
    pred.push_back({u(rng), u(rng), 20, 20});
  }
  const EvalResult a = evaluate_ope(pred, gt);
  std::vector<std::size_t> order(29);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<BoundingBox> gt2{gt[0]}, pred2{pred[0]};
  for (std::size_t i : order) {
    gt2.push_back(gt[i]);
    pred2.push_back(pred[i]);
  }
  const EvalResult b = evaluate_ope(pred2, gt2);
  CHECK(a.precision == b.precision);
  CHECK(a.success == b.success);
}

TEST_CASE("evaluation rejects unusable input") {
  const std::vector<BoundingBox> one{{0, 0, 1, 1}};
  const std::vector<BoundingBox> two{{0, 0, 1, 1}, {0, 0, 1, 1}};
  CHECK_THROWS_AS(evaluate_ope(one, one), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_ope(one, two), std::invalid_argument);
}

TEST_CASE("run comparison normalizes per frame") {
  const std::vector<BoundingBox> gt(11, BoundingBox{10, 10, 20, 20});
  RunSummary a{"align", evaluate_ope(gt, gt), 30, 3, 11, 11};
  RunSummary b{"pool", evaluate_ope(shifted(gt, std::vector<double>(10, 30.0)), gt), 100, 10, 11, 11};
  const std::vector<RunSummary> runs{a, b};
  const auto rows = compare_runs(runs);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].name == "align");
  CHECK(rows[0].iterations_per_frame == doctest::Approx(3.0));
  CHECK(rows[1].precision_at_20 == 0.0);
  CHECK(rows[0].conv_passes_per_frame == doctest::Approx(1.0));
  std::ostringstream os;
  write_comparison(os, rows);
  CHECK(os.str().find("pool") != std::string::npos);
  CHECK_THROWS_AS(compare_runs(std::span<const RunSummary>(runs.data(), 1)), std::invalid_argument);

  std::ostringstream curves;
  write_curves(curves, a.eval);
  CHECK(curves.str().find("# auc") != std::string::npos);
}
