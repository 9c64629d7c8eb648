#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fdt/image.hpp"
#include "fdt/network.hpp"
#include "fdt/sampling.hpp"
#include "fdt/sgd.hpp"
#include "fdt/synthetic.hpp"

namespace fdt {

struct TrainConfig {
  SgdConfig sgd{1e-4, 5e-4, 0.9};
  int iterations = 100;
  int batch_positives = 32;
  int batch_negatives = 96;
  SamplerConfig sampler;
  PreprocessConfig preprocess;
  /// Update the conv trunk too (offline training); false keeps it frozen.
  bool train_trunk = true;
  /// Pixel offset subtracted before dividing by the feature stride.
  double roi_offset = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  /// Batch loss of every iteration, measured on the forward pass before the update.
  std::vector<double> loss;
  std::vector<int> domain;
  std::vector<int> frame;
  int skipped_frames = 0;
  std::vector<std::string> warnings;
};

/// Called after every completed iteration with (iteration, domain).
using TrainHook = std::function<void(int, int, Network<float>&)>;

/**
 * Multi-domain offline training. Iteration i trains video i mod k against
 * head branch k: a random frame is drawn, positives (IoU > t1) and negatives
 * (IoU < t2) are sampled around its ground truth, and one SGD step updates the
 * shared layers and that branch only.
 */
TrainReport train_offline(const VideoDataset& videos, Network<float>& net, const TrainConfig& cfg,
                          const TrainHook& hook = {});

}  // namespace fdt
