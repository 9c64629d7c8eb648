#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdt/image.hpp"
#include "fdt/network.hpp"
#include "fdt/tracking.hpp"

namespace fdt {

struct BenchConfig {
  int candidates = 256;
  /// Frames to measure; 0 means all.
  int frames = 0;
  /// Side of the square input fed to the trunk per candidate in crop mode.
  int crop_size = 107;
  JitterParams jitter{0.6, 1.05, 0.5};
  PreprocessConfig preprocess;
  double roi_offset = 0.0;
  std::uint64_t seed = 0;
};

struct BenchMode {
  double seconds = 0.0;
  std::uint64_t conv_passes = 0;
  /// Best candidate per frame, for agreement checks.
  std::vector<int> best;
};

struct BenchResult {
  int frames = 0;
  int candidates = 0;
  BenchMode shared;
  BenchMode crop;

  /// crop time / shared time.
  double speedup() const { return shared.seconds > 0 ? crop.seconds / shared.seconds : 0.0; }
};

/**
 * Scores the same candidate boxes two ways on each frame: one trunk pass
 * over the whole frame followed by RoI pooling ("shared"), and one trunk
 * pass per cropped candidate pooled over its entire feature map ("crop").
 * Candidates are drawn around the ground truth of each frame (the last
 * available box past the end of the ground truth).
 */
BenchResult run_bench(Network<float>& net, int frame_count, const FrameLoader& load,
                      std::span<const BoundingBox> ground_truth, const BenchConfig& cfg);

}  // namespace fdt
