#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdt/geometry.hpp"
#include "fdt/image.hpp"

namespace fdt {

/// One video: frames with a single ground-truth box each.
struct Video {
  std::string name;
  int domain = 0;
  std::vector<Image> frames;
  std::vector<BoundingBox> ground_truth;
};

struct VideoDataset {
  std::vector<Video> videos;

  /// Every frame has exactly one box and domains are 0..k-1, dense.
  void validate() const;
};

struct SyntheticConfig {
  int videos = 2;
  int frames = 30;
  int width = 192;
  int height = 192;
  int target_w = 48;
  int target_h = 48;
  /// Pixels per frame along a random heading; the patch bounces off the borders.
  double speed = 2.0;
  /// Std of per-pixel Gaussian noise added to every frame.
  double noise = 6.0;
  /// Texture id of the first video; video i uses texture texture_base + i.
  int texture_base = 0;
  std::uint64_t seed = 7;
};

/// Smallest frame the default conv trunk accepts.
inline constexpr int kMinSyntheticSize = 75;

/// Deterministic videos of a textured patch moving over structured noise.
VideoDataset make_synthetic_dataset(const SyntheticConfig& cfg);

/// A single video drawn with texture `texture` (domain index `domain`).
Video make_synthetic_video(const SyntheticConfig& cfg, int texture, int domain, std::uint64_t seed);

}  // namespace fdt
