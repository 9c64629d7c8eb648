#pragma once

#include <cstdint>

#include "fdt/network.hpp"
#include "fdt/synthetic.hpp"
#include "fdt/tracking.hpp"

namespace fdt::testing {

/// Small trunk (stride 8) so tracking and training tests run in seconds.
inline NetworkSpec tiny_spec(int branches = 1, std::uint64_t seed = 5) {
  NetworkSpec s;
  s.trunk = {LayerConfig::conv("conv1", 3, 8, 5, 2, 2), LayerConfig::relu("relu1"), LayerConfig::maxpool("pool1", 2, 2),
             LayerConfig::conv("conv2", 8, 16, 3, 2, 1), LayerConfig::relu("relu2")};
  s.fc_trunk = {LayerConfig::fc("fc4", 16 * 9, 32), LayerConfig::relu("relu4"), LayerConfig::dropout("drop4", 0.5)};
  s.head_branches = branches;
  s.seed = seed;
  return s;
}

inline SyntheticConfig small_synthetic(int videos = 2, int frames = 12, std::uint64_t seed = 3) {
  SyntheticConfig c;
  c.videos = videos;
  c.frames = frames;
  c.width = c.height = 96;
  c.target_w = c.target_h = 32;
  c.seed = seed;
  return c;
}

inline TrackConfig fast_track_config(std::uint64_t seed = 1) {
  TrackConfig c;
  c.preprocess.working_resolution = 0;
  c.candidates = 32;
  c.first_positives = 20;
  c.first_negatives = 60;
  c.online_positives = 8;
  c.online_negatives = 24;
  c.negative_pool = 48;
  c.hard_negatives = 16;
  c.batch_positives = 16;
  c.regression_samples = 60;
  c.seed = seed;
  return c;
}

}  // namespace fdt::testing
