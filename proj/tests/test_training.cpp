#include <doctest.h>

#include "fdt/training.hpp"
#include "test_support.hpp"

using namespace fdt;

namespace {

std::vector<std::vector<float>> snapshot(const std::vector<Param<float>*>& params) {
  std::vector<std::vector<float>> out;
  for (const auto* p : params) out.emplace_back(p->value.values().begin(), p->value.values().end());
  return out;
}

TrainConfig small_train_config(int iterations) {
  TrainConfig c;
  c.iterations = iterations;
  c.batch_positives = 8;
  c.batch_negatives = 24;
  c.preprocess.working_resolution = 0;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("synthetic dataset is deterministic and well formed") {
  const VideoDataset a = make_synthetic_dataset(testing::small_synthetic(3, 5));
  const VideoDataset b = make_synthetic_dataset(testing::small_synthetic(3, 5));
  CHECK_NOTHROW(a.validate());
  REQUIRE(a.videos.size() == 3);
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(a.videos[v].domain == static_cast<int>(v));
    CHECK(a.videos[v].frames == b.videos[v].frames);
    CHECK(a.videos[v].ground_truth == b.videos[v].ground_truth);
    for (const auto& gt : a.videos[v].ground_truth) {
      CHECK(gt.x >= 0);
      CHECK(gt.right() <= 96);
    }
  }
  SyntheticConfig tiny = testing::small_synthetic();
  tiny.width = 40;
  CHECK_THROWS_AS(make_synthetic_dataset(tiny), std::invalid_argument);
}

TEST_CASE("offline training updates only the selected branch") {
  const VideoDataset data = make_synthetic_dataset(testing::small_synthetic(3, 6));
  Network<float> net(testing::tiny_spec(3));
  const TrainConfig cfg = small_train_config(9);

  auto before = std::vector<std::vector<std::vector<float>>>{};
  for (int b = 0; b < 3; ++b) before.push_back(snapshot(net.branch_params(b)));
  auto trunk_prev = snapshot(net.trunk_params());
  int trunk_changes = 0;

  const TrainReport report = train_offline(data, net, cfg, [&](int it, int domain, Network<float>& n) {
    CHECK(domain == it % 3);
    for (int b = 0; b < 3; ++b) {
      const auto now = snapshot(n.branch_params(b));
      if (b != domain) CHECK(now == before[static_cast<std::size_t>(b)]);
      else CHECK(now != before[static_cast<std::size_t>(b)]);
      before[static_cast<std::size_t>(b)] = now;
    }
    const auto trunk_now = snapshot(n.trunk_params());
    trunk_changes += trunk_now != trunk_prev;
    trunk_prev = trunk_now;
  });
  CHECK(report.loss.size() == 9);
  CHECK(trunk_changes == 9);
}

TEST_CASE("training with a frozen trunk leaves conv weights untouched") {
  const VideoDataset data = make_synthetic_dataset(testing::small_synthetic(2, 4));
  Network<float> net(testing::tiny_spec(2));
  TrainConfig cfg = small_train_config(4);
  cfg.train_trunk = false;
  const auto trunk = snapshot(net.trunk_params());
  const auto fc = snapshot(net.fc_params());
  train_offline(data, net, cfg);
  CHECK(snapshot(net.trunk_params()) == trunk);
  CHECK(snapshot(net.fc_params()) != fc);
}

TEST_CASE("training is reproducible under a fixed seed") {
  const VideoDataset data = make_synthetic_dataset(testing::small_synthetic(2, 4));
  Network<float> a(testing::tiny_spec(2)), b(testing::tiny_spec(2));
  const TrainReport ra = train_offline(data, a, small_train_config(4));
  const TrainReport rb = train_offline(data, b, small_train_config(4));
  CHECK(ra.loss == rb.loss);
  CHECK(snapshot(a.all_params()) == snapshot(b.all_params()));
}

TEST_CASE("training loss falls on a learnable problem") {
  const VideoDataset data = make_synthetic_dataset(testing::small_synthetic(2, 8));
  Network<float> net(testing::tiny_spec(2));
  TrainConfig cfg = small_train_config(60);
  cfg.sgd.lr = 1e-3;
  const TrainReport r = train_offline(data, net, cfg);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += r.loss[static_cast<std::size_t>(i)];
    last += r.loss[r.loss.size() - 1 - static_cast<std::size_t>(i)];
  }
  CHECK(last < first);
}

TEST_CASE("training rejects inconsistent inputs") {
  const VideoDataset data = make_synthetic_dataset(testing::small_synthetic(2, 3));
  Network<float> net(testing::tiny_spec(3));
  CHECK_THROWS_AS(train_offline(data, net, small_train_config(1)), std::invalid_argument);
  Network<float> ok(testing::tiny_spec(2));
  TrainConfig bad = small_train_config(1);
  bad.sampler.t2 = 0.9;
  CHECK_THROWS_AS(train_offline(data, ok, bad), std::invalid_argument);
  VideoDataset broken = data;
  broken.videos[0].ground_truth.pop_back();
  CHECK_THROWS_AS(train_offline(broken, ok, small_train_config(1)), std::invalid_argument);
}
