#pragma once

#include <cstddef>
#include <deque>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fdt/geometry.hpp"
#include "fdt/loss.hpp"
#include "fdt/network.hpp"

namespace fdt {

/// Gaussian jitter around a box: center moves by trans_factor * mean(w, h) * N(0, 1)
/// per axis, size is multiplied by scale_base ^ (scale_std * N(0, 1)).
struct JitterParams {
  double trans_factor = 0.6;
  double scale_base = 1.05;
  double scale_std = 0.5;
};

/// `n` jittered copies of `prev`, clipped to the frame.
std::vector<BoundingBox> draw_candidates(const BoundingBox& prev, int n, const JitterParams& jitter, double frame_w,
                                         double frame_h, std::mt19937_64& rng);

struct LabelPartition {
  std::vector<int> positives;
  std::vector<int> negatives;
  std::vector<int> discarded;
};

/// IoU > t1 -> positive, IoU < t2 -> negative, anything between is discarded.
LabelPartition label_samples(std::span<const BoundingBox> boxes, const BoundingBox& gt, double t1, double t2);

struct SamplerConfig {
  double t1 = 0.7;
  double t2 = 0.5;
  JitterParams positive_jitter{0.1, 1.05, 0.05};
  /// Negatives: half uniform within +-neg_trans_range * mean(w, h) of the target,
  /// half uniform over the whole frame.
  double neg_trans_range = 1.0;
  double neg_scale_std = 1.0;
  int max_rounds = 50;
};

/// Up to `n` boxes with IoU > t1 against gt (fewer if the geometry does not allow them).
std::vector<BoundingBox> draw_positive_samples(const BoundingBox& gt, int n, const SamplerConfig& cfg, double frame_w,
                                               double frame_h, std::mt19937_64& rng);

/// Up to `n` boxes with IoU < t2 against gt.
std::vector<BoundingBox> draw_negative_samples(const BoundingBox& gt, int n, const SamplerConfig& cfg, double frame_w,
                                               double frame_h, std::mt19937_64& rng);

/// Indices of the `top_k` highest scores, highest first; equal scores keep input order.
std::vector<int> select_hard_negatives(std::span<const double> scores, int top_k);

/// Scores every negative RoI with `branch` and keeps the `top_k` most target-like.
template <typename T>
std::vector<int> hard_negative_mine(Network<T>& net, const Tensor<T>& featmap, std::span<const RoI> negatives,
                                    int top_k, int branch = 0);

struct Sample {
  BoundingBox box;
  int label = kBackground;
  int frame_id = 0;
};

/// Samples from one frame with their pooled RoI features (one row per sample).
struct FrameSamples {
  int frame_id = 0;
  std::vector<Sample> samples;
  Tensor<float> features;
};

class EmptyBufferError : public std::runtime_error {
 public:
  EmptyBufferError() : std::runtime_error("no stored samples") {}
};

struct CollectedSamples {
  std::vector<Sample> positives;
  std::vector<Sample> negatives;
  Tensor<float> positive_features;
  Tensor<float> negative_features;
};

/// Ring buffer of per-frame sample batches, oldest frame evicted first.
class SampleBuffer {
 public:
  explicit SampleBuffer(std::size_t capacity);

  /// Stores the batch only when `score` > `threshold`; returns whether it was stored.
  bool push(FrameSamples batch, double score, double threshold);
  /// Stores unconditionally (first-frame seeding).
  void push(FrameSamples batch);

  /// All stored samples, split by label. Throws EmptyBufferError when empty.
  CollectedSamples collect() const;

  std::size_t size() const { return frames_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return frames_.empty(); }
  const std::deque<FrameSamples>& frames() const { return frames_; }

 private:
  std::size_t capacity_;
  std::deque<FrameSamples> frames_;
};

/// Gathers the given rows of a features tensor.
Tensor<float> gather_rows(const Tensor<float>& features, std::span<const int> rows);

}  // namespace fdt
