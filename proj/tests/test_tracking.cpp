#include <doctest.h>

#include <limits>

#include "fdt/tracking.hpp"
#include "test_support.hpp"

using namespace fdt;

namespace {

struct Fixture {
  Video video = make_synthetic_dataset(testing::small_synthetic(1, 6)).videos.front();
  Network<float> net{testing::tiny_spec()};
};

std::vector<std::vector<float>> snapshot(const std::vector<Param<float>*>& params) {
  std::vector<std::vector<float>> out;
  for (const auto* p : params) out.emplace_back(p->value.values().begin(), p->value.values().end());
  return out;
}

}  // namespace

TEST_CASE("update loop arithmetic under both policies") {
  const std::vector<double> script{0.5, 0.2, 0.005, 0.001, 0.3};
  std::size_t i = 0;
  auto step = [&] { return script[i++ % script.size()]; };

  UpdateOutcome d = run_update_loop(step, UpdatePolicy::Dynamic, 0.01, 10);
  CHECK(d.iterations == 3);
  CHECK(d.final_loss == 0.005);
  CHECK(d.losses == std::vector<double>{0.5, 0.2, 0.005});

  i = 0;
  UpdateOutcome f = run_update_loop(step, UpdatePolicy::Fixed, 0.01, 10);
  CHECK(f.iterations == 10);

  // The threshold is strict: a loss equal to l does not stop the loop.
  i = 0;
  auto flat = [] { return 0.01; };
  CHECK(run_update_loop(flat, UpdatePolicy::Dynamic, 0.01, 4).iterations == 4);
  // An immediately small loss still costs one iteration.
  CHECK(run_update_loop([] { return 0.0; }, UpdatePolicy::Dynamic, 0.01, 4).iterations == 1);
  CHECK_THROWS_AS(run_update_loop(step, UpdatePolicy::Dynamic, 0.01, 0), std::invalid_argument);
}

TEST_CASE("policy names round trip") {
  CHECK(parse_policy("dynamic") == UpdatePolicy::Dynamic);
  CHECK(parse_policy(to_string(UpdatePolicy::Fixed)) == UpdatePolicy::Fixed);
  CHECK_THROWS_AS(parse_policy("adaptive"), std::invalid_argument);
}

TEST_CASE("track config validation") {
  TrackConfig c;
  CHECK_NOTHROW(c.validate());
  c.loss_threshold = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrackConfig{};
  c.negative_pool = 8;
  c.hard_negatives = 16;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("tracking never touches the conv trunk and runs one conv pass per frame") {
  Fixture fx;
  TrackConfig cfg = testing::fast_track_config();
  cfg.score_threshold = 1e9;  // update on every frame
  cfg.max_update_iters = 2;
  cfg.first_frame_max_iters = 3;
  const auto trunk = snapshot(fx.net.trunk_params());

  Tracker tracker(fx.net.clone(), cfg);
  tracker.network().reset_conv_passes();
  tracker.initialize(fx.video.frames[0], fx.video.ground_truth[0]);
  for (std::size_t f = 1; f < fx.video.frames.size(); ++f) {
    const FrameResult r = tracker.track(fx.video.frames[f]);
    CHECK(r.updated);
    CHECK(r.iterations_used >= 1);
    CHECK(r.iterations_used <= 2);
    CHECK(r.loss_trace.size() == static_cast<std::size_t>(r.iterations_used));
  }
  CHECK(snapshot(tracker.network().trunk_params()) == trunk);
  CHECK(tracker.network().conv_passes() == fx.video.frames.size());
}

TEST_CASE("confident frames skip the update and feed the buffer") {
  Fixture fx;
  TrackConfig cfg = testing::fast_track_config();
  cfg.score_threshold = -std::numeric_limits<double>::infinity();
  const SequenceResult r = run_sequence(fx.net.clone(), fx.video.frames, fx.video.ground_truth[0], cfg);
  REQUIRE(r.frames.size() == fx.video.frames.size());
  CHECK(r.frames[0].box == fx.video.ground_truth[0]);
  CHECK(r.update_events == 0);
  CHECK(r.total_update_iterations == 0);
  for (std::size_t f = 1; f < r.frames.size(); ++f) {
    CHECK_FALSE(r.frames[f].updated);
    CHECK(r.frames[f].box.w > 0);
    CHECK(r.frames[f].box.right() <= 96 + 1e-9);
  }
  CHECK(r.conv_passes == r.frames.size());
}

TEST_CASE("tracker output is a pure function of the seed") {
  Fixture fx;
  TrackConfig cfg = testing::fast_track_config(7);
  cfg.score_threshold = 2.0;
  const SequenceResult a = run_sequence(fx.net.clone(), fx.video.frames, fx.video.ground_truth[0], cfg);
  const SequenceResult b = run_sequence(fx.net.clone(), fx.video.frames, fx.video.ground_truth[0], cfg);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    CHECK(a.frames[f].box == b.frames[f].box);
    CHECK(a.frames[f].score == b.frames[f].score);
    CHECK(a.frames[f].loss_trace == b.frames[f].loss_trace);
  }
}

TEST_CASE("loss override drives the stopping rule") {
  Fixture fx;
  TrackConfig cfg = testing::fast_track_config();
  cfg.score_threshold = 1e9;
  cfg.max_update_iters = 6;
  cfg.first_frame_max_iters = 4;

  SUBCASE("a loss that never falls exhausts the cap") {
    Tracker t(fx.net.clone(), cfg);
    t.set_loss_override([](int, double) { return 1.0; });
    CHECK(t.initialize(fx.video.frames[0], fx.video.ground_truth[0]).iterations_used == 4);
    CHECK(t.track(fx.video.frames[1]).iterations_used == 6);
  }
  SUBCASE("a loss below l on step k stops after k+1 steps") {
    Tracker t(fx.net.clone(), cfg);
    t.set_loss_override([](int it, double) { return it >= 2 ? 0.0 : 1.0; });
    t.initialize(fx.video.frames[0], fx.video.ground_truth[0]);
    const FrameResult r = t.track(fx.video.frames[1]);
    CHECK(r.iterations_used == 3);
    CHECK(r.loss_trace == std::vector<double>{1.0, 1.0, 0.0});
  }
  SUBCASE("fixed policy ignores the loss") {
    cfg.policy = UpdatePolicy::Fixed;
    Tracker t(fx.net.clone(), cfg);
    t.set_loss_override([](int, double) { return 0.0; });
    t.initialize(fx.video.frames[0], fx.video.ground_truth[0]);
    CHECK(t.track(fx.video.frames[1]).iterations_used == 6);
  }
}

TEST_CASE("tracker rejects misuse") {
  Fixture fx;
  Tracker t(fx.net.clone(), testing::fast_track_config());
  CHECK_THROWS(t.track(fx.video.frames[1]));
  CHECK_THROWS_AS(t.initialize(fx.video.frames[0], {200, 200, 30, 30}), std::invalid_argument);
  const std::vector<Image> none;
  CHECK_THROWS(run_sequence(fx.net.clone(), none, fx.video.ground_truth[0], testing::fast_track_config()));
}
