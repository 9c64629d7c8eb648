#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fdt/bbox_regression.hpp"
#include "fdt/image.hpp"
#include "fdt/network.hpp"
#include "fdt/sampling.hpp"

namespace fdt {

/// Dynamic stops as soon as the post-step loss drops below the loss
/// threshold; Fixed always runs the full iteration cap.
enum class UpdatePolicy { Dynamic, Fixed };

std::string to_string(UpdatePolicy p);
UpdatePolicy parse_policy(const std::string& s);

struct TrackConfig {
  /// m: frames whose best score is <= m trigger an update.
  double score_threshold = 0.0;
  /// l: fine-tuning stops once the post-step batch loss is below this.
  double loss_threshold = 0.01;
  int max_update_iters = 10;
  int first_frame_max_iters = 30;
  double lr_first = 0.0005;
  double lr_online = 0.0015;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  UpdatePolicy policy = UpdatePolicy::Dynamic;

  int candidates = 256;
  JitterParams candidate_jitter{0.6, 1.05, 0.5};
  SamplerConfig sampler;
  int first_positives = 50;
  int first_negatives = 200;
  int online_positives = 20;
  int online_negatives = 100;
  std::size_t buffer_capacity = 20;
  /// Per update iteration: this many positives, plus the top `hard_negatives`
  /// of `negative_pool` randomly drawn negatives.
  int batch_positives = 32;
  int negative_pool = 128;
  int hard_negatives = 32;

  bool bbox_regression = true;
  BBoxRegressorConfig regression;
  int regression_samples = 200;
  JitterParams regression_jitter{0.3, 1.05, 1.5};

  PreprocessConfig preprocess;
  double roi_offset = 0.0;
  double head_init_std = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct UpdateOutcome {
  int iterations = 0;
  double final_loss = 0.0;
  std::vector<double> losses;
};

/// Runs `step` (one SGD iteration returning its post-step loss) under the
/// policy: Dynamic stops at the first loss < loss_threshold, Fixed runs
/// max_iters. At least one iteration always runs.
UpdateOutcome run_update_loop(const std::function<double()>& step, UpdatePolicy policy, double loss_threshold,
                              int max_iters);

struct FrameResult {
  BoundingBox box;
  /// Logit margin of the emitted box.
  double score = 0.0;
  bool updated = false;
  int iterations_used = 0;
  std::vector<double> loss_trace;
};

/// Replaces the measured post-step loss seen by the stopping rule;
/// arguments are (iteration index within this update, measured loss).
using LossOverride = std::function<double(int, double)>;

/**
 * Online tracker over a trained network. The conv trunk is frozen for the
 * tracker's whole lifetime; only the FC trunk and the single-branch head
 * are fine-tuned.
 */
class Tracker {
 public:
  /// Swaps in a fresh single-branch head.
  Tracker(Network<float> net, TrackConfig cfg);

  /// First-frame adaptation. Returns the ground truth as the frame result.
  FrameResult initialize(const Image& frame, const BoundingBox& gt);
  FrameResult track(const Image& frame);

  /// One threshold-limited update from the sample buffer (first-frame samples
  /// when the buffer is empty).
  UpdateOutcome fine_tune_online();

  void set_loss_override(LossOverride fn) { loss_override_ = std::move(fn); }

  const Network<float>& network() const { return net_; }
  Network<float>& network() { return net_; }
  const SampleBuffer& buffer() const { return buffer_; }
  const BBoxRegressor& regressor() const { return regressor_; }
  const TrackConfig& config() const { return cfg_; }
  bool initialized() const { return initialized_; }
  /// Previous target box in source-image pixels.
  BoundingBox previous_box() const;

 private:
  struct Pool {
    std::vector<Sample> samples;
    Tensor<float> features;
  };

  Tensor<float> shared_features(const PreparedFrame& frame);
  Tensor<float> pooled_rows(const Tensor<float>& featmap, std::span<const BoundingBox> boxes);
  FrameSamples collect_samples(const Tensor<float>& featmap, const BoundingBox& target, int positives, int negatives,
                               int frame_id, double width, double height);
  UpdateOutcome update(const Tensor<float>& positives, const Tensor<float>& negatives, double lr, int max_iters);
  double batch_loss(const Tensor<float>& features, std::span<const int> labels);

  Network<float> net_;
  TrackConfig cfg_;
  SampleBuffer buffer_;
  FrameSamples first_frame_;
  BBoxRegressor regressor_;
  BoundingBox prev_box_;  // working-resolution pixels
  double scale_ = 1.0;
  int frame_id_ = 0;
  bool initialized_ = false;
  std::mt19937_64 rng_;
  LossOverride loss_override_;
};

struct SequenceResult {
  std::vector<FrameResult> frames;
  std::uint64_t conv_passes = 0;
  int update_events = 0;
  int total_update_iterations = 0;
};

/// Loads frame i on demand; throws to abort the run.
using FrameLoader = std::function<Image(int)>;

/// Initializes on frame 0 with `first_gt`, tracks frames 1..count-1.
SequenceResult run_sequence(Network<float> net, int frame_count, const FrameLoader& load, const BoundingBox& first_gt,
                            const TrackConfig& cfg);

SequenceResult run_sequence(Network<float> net, std::span<const Image> frames, const BoundingBox& first_gt,
                            const TrackConfig& cfg);

}  // namespace fdt
