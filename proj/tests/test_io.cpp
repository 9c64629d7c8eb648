#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "fdt/io.hpp"
#include "fdt/run_config.hpp"
#include "test_support.hpp"

using namespace fdt;
namespace fs = std::filesystem;

namespace {

std::vector<BoundingBox> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ground_truth(in, "gt.txt");
}

std::pair<int, int> error_position(const std::string& text) {
  try {
    parse(text);
  } catch (const GroundTruthError& e) {
    return {e.line(), e.column()};
  }
  return {0, 0};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fdt_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("ground truth accepts comma, tab and space separators") {
  const auto boxes = parse("1,2,10,20\n5\t6\t7\t8\r\n3 4  5 6\n\n");
  REQUIRE(boxes.size() == 3);
  CHECK(boxes[0] == BoundingBox{0, 1, 10, 20});
  CHECK(boxes[1] == BoundingBox{4, 5, 7, 8});
  CHECK(boxes[2] == BoundingBox{2, 3, 5, 6});
  CHECK(parse("1.5,2.25,3,4").front() == BoundingBox{0.5, 1.25, 3, 4});
}

TEST_CASE("malformed ground truth reports line and column") {
  CHECK(error_position("1,2,3,4\n1,2,x,4\n") == std::pair{2, 5});
  CHECK(error_position("1,2,3\n") == std::pair{1, 6});
  CHECK(error_position("1,2,3,4,5\n") == std::pair{1, 9});
  CHECK(error_position("1,2,3,4\n\n1,2,3,4\n") == std::pair{2, 1});
  CHECK(error_position("1,2,0,4\n") == std::pair{1, 1});
  CHECK(error_position("1,2,nan,4\n") == std::pair{1, 5});
  try {
    parse("1,2\n");
    FAIL("expected an error");
  } catch (const GroundTruthError& e) {
    CHECK(std::string(e.what()).rfind("gt.txt:1:4:", 0) == 0);
  }
}

TEST_CASE("missing files raise MissingFileError") {
  CHECK_THROWS_AS(read_ground_truth("/nonexistent/gt.txt"), MissingFileError);
  CHECK_THROWS_AS(open_sequence("/nonexistent/seq"), MissingFileError);
  CHECK_THROWS_AS(read_result_boxes("/nonexistent/out.txt"), MissingFileError);
}

TEST_CASE("sequence directories round trip and sort frames numerically") {
  const Video video = make_synthetic_dataset(testing::small_synthetic(1, 12)).videos.front();
  const fs::path dir = scratch_dir("seq");
  write_sequence(video, dir);
  const SequenceDir seq = open_sequence(dir, true);
  REQUIRE(seq.frame_count() == 12);
  CHECK(seq.frames[1].filename() == "0002.ppm");
  CHECK(seq.frames[9].filename() == "0010.ppm");
  CHECK(seq.load_frame(10) == video.frames[10]);
  REQUIRE(seq.ground_truth.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(seq.ground_truth[i].x == doctest::Approx(video.ground_truth[i].x).epsilon(1e-6));
    CHECK(seq.ground_truth[i].h == doctest::Approx(video.ground_truth[i].h).epsilon(1e-6));
  }

  // Unpadded names still sort by number, not by text.
  const fs::path loose = scratch_dir("loose");
  for (int i : {1, 2, 10}) write_pnm(video.frames[static_cast<std::size_t>(i)], loose / (std::to_string(i) + ".ppm"));
  std::ofstream(loose / kGroundTruthFile) << "1,1,5,5\n";
  const SequenceDir l = open_sequence(loose);
  CHECK(l.frames.back().filename() == "10.ppm");
  CHECK_THROWS_AS(open_sequence(loose, true), DataError);

  fs::remove_all(dir);
  fs::remove_all(loose);
}

TEST_CASE("result files round trip boxes and carry score and iterations") {
  std::vector<FrameResult> frames(2);
  frames[0].box = {0, 1, 10, 20};
  frames[0].updated = true;
  frames[0].iterations_used = 7;
  frames[1].box = {3.25, 4.5, 11, 9};
  frames[1].score = -0.75;
  frames[1].loss_trace = {0.5, 0.004};
  std::ostringstream os;
  write_results(os, frames);
  CHECK(os.str().rfind("1.0000,2.0000,10.0000,20.0000,0.000000,7\n", 0) == 0);

  const fs::path path = scratch_dir("res") / "out.txt";
  write_results(path, frames);
  const auto back = read_result_boxes(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1] == frames[1].box);

  std::ostringstream log;
  write_frame_log(log, frames);
  std::istringstream lines(log.str());
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  const auto j = nlohmann::json::parse(second);
  CHECK(j["frame"] == 2);  // 1-based, like the result file
  CHECK(j["losses"].size() == 2);
  CHECK(j["updated"] == false);
  fs::remove_all(path.parent_path());
}

TEST_CASE("run config parses keys and rejects bad lines") {
  std::istringstream ok(
      "# tracker\n"
      "track.m = 0.5\n"
      "track.l=0.02   # comment\n"
      "track.policy = fixed\n"
      "net.variant = fc2\n"
      "net.roi = pool\n"
      "seed = 11\n");
  const RunConfig c = parse_run_config(ok);
  CHECK(c.track.score_threshold == 0.5);
  CHECK(c.track.loss_threshold == 0.02);
  CHECK(c.track.policy == UpdatePolicy::Fixed);
  CHECK(c.variant == Variant::Fc2);
  CHECK(c.roi == RoiMethod::Pool);
  CHECK(c.track.seed == 11);
  CHECK(c.train.seed == 11);
  CHECK(c.network_spec(1).roi_method == RoiMethod::Pool);

  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_run_config(in, {}, "cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("track.m = 1\ntrack.bogus = 2\n").rfind("cfg:2:", 0) == 0);
  CHECK(error_of("track.m = 1\ntrack.m = 2\n").rfind("cfg:2:", 0) == 0);
  CHECK(error_of("track.m = abc\n").rfind("cfg:1:", 0) == 0);
  CHECK(error_of("track.m\n").rfind("cfg:1:", 0) == 0);
  CHECK_FALSE(error_of("track.l = -1\n").empty());
  CHECK(error_of("net.roi = warp\n").rfind("cfg:1:", 0) == 0);

  const auto keys = run_config_keys();
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(std::find(keys.begin(), keys.end(), "track.m") != keys.end());
  CHECK_THROWS_AS(load_run_config("/nonexistent/cfg.txt"), MissingFileError);
}
