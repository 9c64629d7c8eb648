#include <doctest.h>

#include <filesystem>
#include <random>

#include "fdt/checkpoint.hpp"
#include "fdt/loss.hpp"
#include "fdt/network.hpp"
#include "test_support.hpp"

using namespace fdt;

namespace {

Tensor<float> random_frame(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-100.0f, 100.0f);
  Tensor<float> t({1, 3, h, w});
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("default architecture geometry") {
  const NetworkSpec s = NetworkSpec::make();
  CHECK_NOTHROW(s.validate());
  CHECK(s.feature_stride() == 16);
  CHECK(s.feature_offset() == 21.0);
  CHECK(s.trunk_channels() == 512);
  CHECK(s.pooled_size() == 3 * 3 * 512);
  CHECK(s.head_input_size() == 512);
  CHECK(s.trunk_extent(107) == 5);
  CHECK(s.trunk_extent(40) == 0);

  const NetworkSpec c5 = NetworkSpec::make(Variant::Conv5);
  CHECK(c5.feature_stride() == 16);
  CHECK(c5.trunk.size() == s.trunk.size() + 4);
  const NetworkSpec f2 = NetworkSpec::make(Variant::Fc2);
  CHECK(f2.fc_trunk.size() == 3);
  CHECK(f2.head_input_size() == 512);
}

TEST_CASE("variant names round trip") {
  for (Variant v : {Variant::Default, Variant::Conv5, Variant::Fc2}) CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("conv7"), std::invalid_argument);
}

TEST_CASE("invalid specs are rejected with the failing layer named") {
  NetworkSpec s = NetworkSpec::make();
  s.fc_trunk[0].in_channels = 100;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("fc4"), std::invalid_argument);
  s = NetworkSpec::make();
  s.head_branches = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("score_rois equals pool followed by score_pooled") {
  Network<float> net(testing::tiny_spec(2));
  const Tensor<float> fm = net.forward_shared(random_frame(64, 80, 1));
  CHECK(fm.dim(1) == 16);
  const std::vector<RoI> rois{{0.5, 0.5, 3.5, 4.0, 0}, {2.0, 1.0, 7.0, 6.5, 0}};
  const Tensor<float> direct = net.score_rois(fm, rois, 1, Mode::Infer);
  const Tensor<float> staged = net.score_pooled(net.pool(fm, rois).values, 1, Mode::Infer);
  CHECK(direct.shape() == std::vector<int>{2, 2});
  CHECK(direct == staged);
  CHECK_THROWS_AS(net.score_rois(fm, rois, 2, Mode::Infer), std::out_of_range);
}

TEST_CASE("conv pass counter counts trunk invocations only") {
  Network<float> net(testing::tiny_spec());
  const Tensor<float> fm = net.forward_shared(random_frame(48, 48, 2));
  std::vector<RoI> rois(50, RoI{0, 0, 2, 2, 0});
  net.score_rois(fm, rois, 0, Mode::Infer);
  net.score_rois(fm, rois, 0, Mode::Infer);
  CHECK(net.conv_passes() == 1);
  net.reset_conv_passes();
  CHECK(net.conv_passes() == 0);
}

TEST_CASE("frames smaller than the receptive field are rejected") {
  Network<float> net(NetworkSpec::make());
  CHECK_THROWS_AS(net.forward_shared(random_frame(30, 30, 3)), ShapeError);
}

TEST_CASE("clone is a deep copy") {
  Network<float> a(testing::tiny_spec());
  Network<float> b = a.clone();
  a.all_params().front()->value[0] += 1.0f;
  CHECK(a.all_params().front()->value[0] != b.all_params().front()->value[0]);
}

TEST_CASE("backward_fc touches only the active branch and the fc trunk") {
  Network<float> net(testing::tiny_spec(3));
  const Tensor<float> fm = net.forward_shared(random_frame(48, 48, 4), Mode::Train);
  const std::vector<RoI> rois{{0, 0, 3, 3, 0}, {1, 1, 4, 4, 0}};
  const Tensor<float> logits = net.score_rois(fm, rois, 1, Mode::Train);
  const std::vector<int> labels{kTarget, kBackground};
  const auto loss = softmax_cross_entropy(logits, labels);
  for (auto* p : net.all_params()) p->zero_grad();
  net.backward_fc(loss.grad);
  auto nonzero = [](const Param<float>* p) {
    for (float g : p->grad.values())
      if (g != 0.0f) return true;
    return false;
  };
  for (auto* p : net.branch_params(0)) CHECK_FALSE(nonzero(p));
  for (auto* p : net.branch_params(2)) CHECK_FALSE(nonzero(p));
  for (auto* p : net.branch_params(1)) CHECK(nonzero(p));
  for (auto* p : net.trunk_params()) CHECK_FALSE(nonzero(p));
}

TEST_CASE("swap_head and reinit_fc_trunk") {
  Network<float> net(testing::tiny_spec(3));
  const auto trunk_before = net.trunk_params().front()->value;
  const auto fc_before = net.fc_params().front()->value;
  net.swap_head(1, 0.01, 9);
  CHECK(net.branches() == 1);
  for (float b : net.branch_params(0).back()->value.values()) CHECK(b == 0.0f);
  net.reinit_fc_trunk(10);
  CHECK(net.trunk_params().front()->value == trunk_before);
  CHECK_FALSE(net.fc_params().front()->value == fc_before);
  CHECK_THROWS_AS(net.swap_head(0, 0.01, 1), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves every parameter") {
  Network<float> net(testing::tiny_spec(3, 17));
  const auto bytes = serialize_network(net);
  Network<float> back = deserialize_network<float>(bytes, testing::tiny_spec(1, 99));
  CHECK(back.branches() == 3);
  const auto a = net.named_params(), b = back.named_params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value == b[i]->value);
  }

  const auto path = std::filesystem::temp_directory_path() / "fdt_ckpt_test.bin";
  save_checkpoint(net, path);
  Network<float> loaded = load_checkpoint<float>(path, testing::tiny_spec());
  CHECK(serialize_network(loaded) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint errors carry distinct kinds") {
  Network<float> net(testing::tiny_spec());
  auto bytes = serialize_network(net);
  auto kind_of = [](const std::vector<std::uint8_t>& b, const NetworkSpec& spec) {
    try {
      deserialize_network<float>(b, spec);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    FAIL("no error");
    return CheckpointError::Kind::Io;
  };

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of(bad_magic, testing::tiny_spec()) == CheckpointError::Kind::BadMagic);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK(kind_of(bad_version, testing::tiny_spec()) == CheckpointError::Kind::VersionMismatch);

  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  CHECK(kind_of(truncated, testing::tiny_spec()) == CheckpointError::Kind::Truncated);

  NetworkSpec wider = testing::tiny_spec();
  wider.fc_trunk[0].out_channels = 40;
  CHECK(kind_of(bytes, wider) == CheckpointError::Kind::ShapeMismatch);

  NetworkSpec deeper = testing::tiny_spec();
  deeper.trunk.push_back(LayerConfig::conv("conv3", 16, 16, 3, 1, 1));
  CHECK(kind_of(bytes, deeper) == CheckpointError::Kind::MissingTensor);

  CHECK_THROWS_AS(load_checkpoint<float>("/nonexistent/ckpt.bin", testing::tiny_spec()), CheckpointError);
}
