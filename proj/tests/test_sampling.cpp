#include <doctest.h>

#include <algorithm>

#include "fdt/sampling.hpp"
#include "test_support.hpp"

using namespace fdt;

namespace {

FrameSamples make_batch(int frame, int positives, int negatives, float tag) {
  FrameSamples f;
  f.frame_id = frame;
  std::vector<float> data;
  for (int i = 0; i < positives + negatives; ++i) {
    f.samples.push_back({{0, 0, 10, 10}, i < positives ? kTarget : kBackground, frame});
    data.push_back(tag + static_cast<float>(i));
    data.push_back(-tag);
  }
  f.features = Tensor<float>({positives + negatives, 2}, std::move(data));
  return f;
}

}  // namespace

TEST_CASE("iou and center error") {
  const BoundingBox a{0, 0, 10, 10}, b{5, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, b) == doctest::Approx(50.0 / 150.0));
  CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
  CHECK(center_error(a, {3, 4, 10, 10}) == doctest::Approx(5.0));
}

TEST_CASE("clip_to_frame keeps boxes inside and leaves inner boxes alone") {
  const BoundingBox inner{10, 10, 20, 20};
  CHECK(clip_to_frame(inner, 100, 100) == inner);
  const BoundingBox out = clip_to_frame({90, -5, 30, 200}, 100, 100);
  CHECK(out.x >= 0);
  CHECK(out.right() <= 100);
  CHECK(out.y >= 0);
  CHECK(out.bottom() <= 100);
  CHECK(out.h == 100);
}

TEST_CASE("candidates are reproducible and stay in the frame") {
  const BoundingBox prev{40, 30, 20, 24};
  std::mt19937_64 r1(5), r2(5);
  const auto a = draw_candidates(prev, 64, JitterParams{}, 120, 90, r1);
  const auto b = draw_candidates(prev, 64, JitterParams{}, 120, 90, r2);
  CHECK(a == b);
  CHECK(a.size() == 64);
  for (const auto& c : a) {
    CHECK(c.x >= 0);
    CHECK(c.y >= 0);
    CHECK(c.right() <= 120 + 1e-9);
    CHECK(c.bottom() <= 90 + 1e-9);
  }
  CHECK_THROWS_AS(draw_candidates(prev, 0, JitterParams{}, 120, 90, r1), std::invalid_argument);
}

TEST_CASE("zero jitter reproduces the previous box") {
  std::mt19937_64 rng(1);
  const BoundingBox prev{12.5, 7.25, 30, 18};
  for (const auto& c : draw_candidates(prev, 8, JitterParams{0.0, 1.05, 0.0}, 100, 100, rng)) CHECK(c == prev);
}

TEST_CASE("labels partition by the two iou thresholds") {
  const BoundingBox gt{0, 0, 10, 10};
  const std::vector<BoundingBox> boxes{{0, 0, 10, 10}, {1, 0, 10, 10}, {4, 0, 10, 10}, {8, 0, 10, 10}};
  // IoUs: 1, 0.818, 0.4286, 0.111
  const LabelPartition p = label_samples(boxes, gt, 0.7, 0.5);
  CHECK(p.positives == std::vector<int>{0, 1});
  CHECK(p.negatives == std::vector<int>{2, 3});
  CHECK(p.discarded.empty());
  const LabelPartition q = label_samples(boxes, gt, 0.9, 0.3);
  CHECK(q.positives == std::vector<int>{0});
  CHECK(q.discarded == std::vector<int>{1, 2});
  CHECK_THROWS_AS(label_samples(boxes, gt, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("positive and negative draws respect their thresholds") {
  std::mt19937_64 rng(2);
  const BoundingBox gt{60, 50, 40, 30};
  const SamplerConfig cfg;
  const auto pos = draw_positive_samples(gt, 50, cfg, 200, 160, rng);
  const auto neg = draw_negative_samples(gt, 200, cfg, 200, 160, rng);
  CHECK(pos.size() == 50);
  CHECK(neg.size() == 200);
  for (const auto& b : pos) CHECK(iou(b, gt) > cfg.t1);
  for (const auto& b : neg) CHECK(iou(b, gt) < cfg.t2);
}

TEST_CASE("hard negatives are the highest scores, ties in input order") {
  const std::vector<double> scores{0.1, 0.9, -0.3, 0.9, 0.5};
  CHECK(select_hard_negatives(scores, 3) == std::vector<int>{1, 3, 4});
  CHECK(select_hard_negatives(scores, 10).size() == 5);
  CHECK(select_hard_negatives(scores, 0).empty());
}

TEST_CASE("hard_negative_mine agrees with brute-force scoring") {
  Network<float> net(testing::tiny_spec());
  std::mt19937_64 rng(3);
  Tensor<float> frame({1, 3, 64, 64});
  std::uniform_real_distribution<float> u(-50, 50);
  for (auto& v : frame.values()) v = u(rng);
  const Tensor<float> fm = net.forward_shared(frame);
  std::vector<RoI> rois;
  for (int i = 0; i < 20; ++i) rois.push_back({0.3 * i, 0.2 * i, 0.3 * i + 2, 0.2 * i + 3, 0});
  const auto mined = hard_negative_mine(net, fm, rois, 5);
  const auto scores = margins(net.score_rois(fm, rois, 0, Mode::Infer));
  for (int picked : mined)
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (std::find(mined.begin(), mined.end(), static_cast<int>(j)) == mined.end())
        CHECK(scores[static_cast<std::size_t>(picked)] >= scores[j]);
  CHECK_THROWS_AS(hard_negative_mine(net, fm, rois, 21), std::invalid_argument);
}

TEST_CASE("sample buffer admits only confident frames and evicts the oldest") {
  SampleBuffer buf(2);
  CHECK_THROWS_AS(buf.collect(), EmptyBufferError);
  CHECK_FALSE(buf.push(make_batch(1, 1, 1, 10), 0.0, 0.0));
  CHECK(buf.push(make_batch(1, 1, 1, 10), 0.5, 0.0));
  CHECK(buf.push(make_batch(2, 2, 1, 20), 0.5, 0.0));
  CHECK(buf.push(make_batch(3, 1, 2, 30), 0.5, 0.0));
  CHECK(buf.size() == 2);
  CHECK(buf.frames().front().frame_id == 2);

  const CollectedSamples all = buf.collect();
  CHECK(all.positives.size() == 3);
  CHECK(all.negatives.size() == 3);
  CHECK(all.positive_features.shape() == std::vector<int>{3, 2});
  CHECK(all.positive_features[0] == 20.0f);
  CHECK(all.negative_features[0] == 22.0f);
  CHECK_THROWS_AS(SampleBuffer(0), std::invalid_argument);
}

TEST_CASE("gather_rows copies the selected rows") {
  const Tensor<float> t({3, 2}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const std::vector<int> rows{2, 0};
  const Tensor<float> g = gather_rows(t, rows);
  CHECK(g.shape() == std::vector<int>{2, 2});
  CHECK(g[0] == 5.0f);
  CHECK(g[3] == 2.0f);
}
