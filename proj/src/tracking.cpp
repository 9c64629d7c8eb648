#include "fdt/tracking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fdt/loss.hpp"
#include "fdt/sgd.hpp"

namespace fdt {

std::string to_string(UpdatePolicy p) { return p == UpdatePolicy::Dynamic ? "dynamic" : "fixed10"; }

UpdatePolicy parse_policy(const std::string& s) {
  if (s == "dynamic") return UpdatePolicy::Dynamic;
  if (s == "fixed10" || s == "fixed") return UpdatePolicy::Fixed;
  throw std::invalid_argument("unknown update policy '" + s + "'");
}

void TrackConfig::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("invalid track config: " + why); };
  if (!(loss_threshold > 0)) fail("loss threshold l must be > 0");
  if (max_update_iters < 1) fail("max_update_iters must be >= 1");
  if (first_frame_max_iters < 1) fail("first_frame_max_iters must be >= 1");
  if (!(lr_first > 0) || !(lr_online > 0)) fail("learning rates must be > 0");
  if (candidates < 1) fail("candidate count must be >= 1");
  if (first_positives < 1 || first_negatives < 1) fail("first-frame sample counts must be >= 1");
  if (online_positives < 0 || online_negatives < 0) fail("online sample counts must be >= 0");
  if (buffer_capacity < 1) fail("buffer capacity must be >= 1");
  if (batch_positives < 1 || hard_negatives < 1 || negative_pool < hard_negatives)
    fail("update batch needs positives >= 1 and negative_pool >= hard_negatives >= 1");
  if (!(sampler.t1 > sampler.t2)) fail("sampler thresholds require t1 > t2");
}

UpdateOutcome run_update_loop(const std::function<double()>& step, UpdatePolicy policy, double loss_threshold,
                              int max_iters) {
  if (max_iters < 1) throw std::invalid_argument("update loop needs max_iters >= 1");
  UpdateOutcome out;
  while (out.iterations < max_iters) {
    const double loss = step();
    ++out.iterations;
    out.losses.push_back(loss);
    out.final_loss = loss;
    if (policy == UpdatePolicy::Dynamic && loss < loss_threshold) break;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<int> random_subset(int n, int k, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(std::min(n, k)));
  return idx;
}

Tensor<float> concat_rows(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  std::vector<float> data(a.values().begin(), a.values().end());
  data.insert(data.end(), b.values().begin(), b.values().end());
  return Tensor<float>({a.dim(0) + b.dim(0), static_cast<int>(a.row_size())}, std::move(data));
}

}  // namespace

Tracker::Tracker(Network<float> net, TrackConfig cfg)
    : net_(std::move(net)), cfg_(std::move(cfg)), buffer_(std::max<std::size_t>(cfg_.buffer_capacity, 1)),
      rng_(cfg_.seed) {
  cfg_.validate();
  net_.swap_head(1, cfg_.head_init_std, rng_());
  net_.reseed_dropout(rng_());
  net_.set_trunk_learnable(false);
}

BoundingBox Tracker::previous_box() const { return scale_box(prev_box_, 1.0 / scale_); }

Tensor<float> Tracker::shared_features(const PreparedFrame& frame) { return net_.forward_shared(frame.tensor, Mode::Infer); }

Tensor<float> Tracker::pooled_rows(const Tensor<float>& featmap, std::span<const BoundingBox> boxes) {
  if (boxes.empty()) return {};
  const FeatureExtent extent{featmap.dim(3), featmap.dim(2)};
  const auto rois = boxes_to_rois(boxes, net_.feature_stride(), extent, cfg_.roi_offset);
  PooledFeature<float> pooled = net_.pool(featmap, rois);
  Tensor<float> rows = std::move(pooled.values);
  rows.reshape({static_cast<int>(boxes.size()), static_cast<int>(rows.row_size())});
  return rows;
}

FrameSamples Tracker::collect_samples(const Tensor<float>& featmap, const BoundingBox& target, int positives,
                                      int negatives, int frame_id, double width, double height) {
  const auto pos = draw_positive_samples(target, positives, cfg_.sampler, width, height, rng_);
  const auto neg = draw_negative_samples(target, negatives, cfg_.sampler, width, height, rng_);
  std::vector<BoundingBox> boxes = pos;
  boxes.insert(boxes.end(), neg.begin(), neg.end());
  FrameSamples fs;
  fs.frame_id = frame_id;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    fs.samples.push_back({boxes[i], i < pos.size() ? kTarget : kBackground, frame_id});
  fs.features = pooled_rows(featmap, boxes);
  return fs;
}

double Tracker::batch_loss(const Tensor<float>& features, std::span<const int> labels) {
  return softmax_cross_entropy_loss(net_.score_pooled(features, 0, Mode::Infer), labels);
}

UpdateOutcome Tracker::update(const Tensor<float>& positives, const Tensor<float>& negatives, double lr,
                              int max_iters) {
  if (positives.empty() || negatives.empty()) throw std::logic_error("update needs positive and negative samples");
  const SgdConfig sgd{lr, cfg_.weight_decay, cfg_.momentum};
  std::vector<Param<float>*> params = net_.fc_params();
  for (Param<float>* p : net_.branch_params(0)) params.push_back(p);
  int iteration = 0;

  auto step = [&]() {
    const auto pos_rows = random_subset(positives.dim(0), cfg_.batch_positives, rng_);
    const auto pool_rows = random_subset(negatives.dim(0), cfg_.negative_pool, rng_);
    const Tensor<float> pool = gather_rows(negatives, pool_rows);
    const auto hard = select_hard_negatives(margins(net_.score_pooled(pool, 0, Mode::Infer)), cfg_.hard_negatives);

    const Tensor<float> batch = concat_rows(gather_rows(positives, pos_rows), gather_rows(pool, hard));
    std::vector<int> labels(pos_rows.size(), kTarget);
    labels.insert(labels.end(), hard.size(), kBackground);

    const Tensor<float> logits = net_.score_pooled(batch, 0, Mode::Train);
    const LossResult<float> loss = softmax_cross_entropy(logits, labels);
    net_.backward_fc(loss.grad);
    sgd_step<float>(params, sgd);

    const double post = batch_loss(batch, labels);
    const int k = iteration++;
    return loss_override_ ? loss_override_(k, post) : post;
  };
  return run_update_loop(step, cfg_.policy, cfg_.loss_threshold, max_iters);
}

FrameResult Tracker::initialize(const Image& frame, const BoundingBox& gt) {
  const PreparedFrame prepared = prepare_frame(frame, cfg_.preprocess);
  if (!overlaps_frame(gt, frame.width, frame.height))
    throw std::invalid_argument("first-frame ground truth " + to_string(gt) + " lies outside the frame");
  scale_ = prepared.scale;
  const BoundingBox target = scale_box(gt, scale_);
  const Tensor<float> featmap = shared_features(prepared);

  first_frame_ = collect_samples(featmap, target, cfg_.first_positives, cfg_.first_negatives, 0, prepared.width,
                                 prepared.height);
  std::vector<int> pos_rows, neg_rows;
  for (std::size_t i = 0; i < first_frame_.samples.size(); ++i)
    (first_frame_.samples[i].label == kTarget ? pos_rows : neg_rows).push_back(static_cast<int>(i));
  if (pos_rows.empty() || neg_rows.empty())
    throw std::runtime_error("first frame yields no positive or no negative samples for " + to_string(gt));
  const UpdateOutcome outcome = update(gather_rows(first_frame_.features, pos_rows),
                                       gather_rows(first_frame_.features, neg_rows), cfg_.lr_first,
                                       cfg_.first_frame_max_iters);

  regressor_ = {};
  if (cfg_.bbox_regression) {
    const auto boxes =
        draw_candidates(target, cfg_.regression_samples, cfg_.regression_jitter, prepared.width, prepared.height, rng_);
    regressor_ = BBoxRegressor::fit(pooled_rows(featmap, boxes), boxes, target, cfg_.regression);
  }

  buffer_ = SampleBuffer(cfg_.buffer_capacity);
  buffer_.push(first_frame_);
  prev_box_ = target;
  frame_id_ = 0;
  initialized_ = true;

  const std::vector<BoundingBox> gt_only{target};
  FrameResult r;
  r.box = gt;
  r.score = margins(net_.score_pooled(pooled_rows(featmap, gt_only), 0, Mode::Infer)).front();
  r.updated = true;
  r.iterations_used = outcome.iterations;
  r.loss_trace = outcome.losses;
  return r;
}

UpdateOutcome Tracker::fine_tune_online() {
  CollectedSamples collected;
  try {
    collected = buffer_.collect();
  } catch (const EmptyBufferError&) {
  }
  if (collected.positive_features.empty() || collected.negative_features.empty()) {
    collected = {};
    for (std::size_t i = 0; i < first_frame_.samples.size(); ++i)
      (first_frame_.samples[i].label == kTarget ? collected.positives : collected.negatives)
          .push_back(first_frame_.samples[i]);
    std::vector<int> pos_rows, neg_rows;
    for (std::size_t i = 0; i < first_frame_.samples.size(); ++i)
      (first_frame_.samples[i].label == kTarget ? pos_rows : neg_rows).push_back(static_cast<int>(i));
    collected.positive_features = gather_rows(first_frame_.features, pos_rows);
    collected.negative_features = gather_rows(first_frame_.features, neg_rows);
  }
  return update(collected.positive_features, collected.negative_features, cfg_.lr_online, cfg_.max_update_iters);
}

FrameResult Tracker::track(const Image& frame) {
  if (!initialized_) throw std::logic_error("track called before initialize");
  ++frame_id_;
  const PreparedFrame prepared = prepare_frame(frame, cfg_.preprocess);
  const Tensor<float> featmap = shared_features(prepared);

  const auto candidates =
      draw_candidates(prev_box_, cfg_.candidates, cfg_.candidate_jitter, prepared.width, prepared.height, rng_);
  const Tensor<float> features = pooled_rows(featmap, candidates);
  const auto scores = margins(net_.score_pooled(features, 0, Mode::Infer));
  const std::size_t best = argmax_first(scores);

  FrameResult r;
  r.score = scores[best];
  BoundingBox box = candidates[best];
  if (r.score > cfg_.score_threshold) {
    if (regressor_.fitted()) {
      const std::span<const float> row(features.data() + best * features.row_size(), features.row_size());
      box = regressor_.refine(row, box, prepared.width, prepared.height);
    }
    buffer_.push(collect_samples(featmap, box, cfg_.online_positives, cfg_.online_negatives, frame_id_,
                                 prepared.width, prepared.height),
                 r.score, cfg_.score_threshold);
  } else {
    const UpdateOutcome outcome = fine_tune_online();
    r.updated = true;
    r.iterations_used = outcome.iterations;
    r.loss_trace = outcome.losses;
    const auto rescored = margins(net_.score_pooled(features, 0, Mode::Infer));
    box = candidates[argmax_first(rescored)];
  }
  prev_box_ = box;
  r.box = scale_box(box, 1.0 / scale_);
  return r;
}

// ---------------------------------------------------------------------------

SequenceResult run_sequence(Network<float> net, int frame_count, const FrameLoader& load, const BoundingBox& first_gt,
                            const TrackConfig& cfg) {
  if (frame_count < 1) throw std::invalid_argument("sequence has no frames");
  auto fetch = [&](int i) {
    try {
      return load(i);
    } catch (const std::exception& e) {
      throw std::runtime_error("frame " + std::to_string(i + 1) + ": " + e.what());
    }
  };
  net.reset_conv_passes();
  Tracker tracker(std::move(net), cfg);
  SequenceResult res;
  res.frames.push_back(tracker.initialize(fetch(0), first_gt));
  for (int i = 1; i < frame_count; ++i) {
    FrameResult r = tracker.track(fetch(i));
    if (r.updated) {
      ++res.update_events;
      res.total_update_iterations += r.iterations_used;
    }
    res.frames.push_back(std::move(r));
  }
  res.conv_passes = tracker.network().conv_passes();
  return res;
}

SequenceResult run_sequence(Network<float> net, std::span<const Image> frames, const BoundingBox& first_gt,
                            const TrackConfig& cfg) {
  return run_sequence(
      std::move(net), static_cast<int>(frames.size()), [&](int i) { return frames[static_cast<std::size_t>(i)]; },
      first_gt, cfg);
}

}  // namespace fdt
