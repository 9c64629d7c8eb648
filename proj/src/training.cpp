#include "fdt/training.hpp"

#include <random>
#include <stdexcept>

#include "fdt/loss.hpp"

namespace fdt {

void TrainConfig::validate() const {
  if (!(sgd.lr > 0)) throw std::invalid_argument("training learning rate must be > 0");
  if (iterations < 0) throw std::invalid_argument("training iterations must be >= 0");
  if (batch_positives < 1 || batch_negatives < 1) throw std::invalid_argument("training batch counts must be >= 1");
  if (!(sampler.t1 > sampler.t2)) throw std::invalid_argument("training thresholds require t1 > t2");
}

namespace {

struct Batch {
  std::vector<BoundingBox> boxes;
  std::vector<int> labels;
};

}  // namespace

TrainReport train_offline(const VideoDataset& videos, Network<float>& net, const TrainConfig& cfg,
                          const TrainHook& hook) {
  cfg.validate();
  videos.validate();
  const int k = static_cast<int>(videos.videos.size());
  if (net.branches() != k)
    throw std::invalid_argument("network head has " + std::to_string(net.branches()) + " branches for " +
                                std::to_string(k) + " videos");

  // videos[d] is the one whose domain index is d
  std::vector<const Video*> by_domain(static_cast<std::size_t>(k));
  for (const auto& v : videos.videos) by_domain[static_cast<std::size_t>(v.domain)] = &v;

  std::mt19937_64 rng(cfg.seed);
  net.reseed_dropout(rng());
  net.set_trunk_learnable(cfg.train_trunk);
  TrainReport report;

  for (int it = 0; it < cfg.iterations; ++it) {
    const int d = it % k;
    const Video& video = *by_domain[static_cast<std::size_t>(d)];
    std::uniform_int_distribution<int> pick(0, static_cast<int>(video.frames.size()) - 1);

    PreparedFrame frame;
    BoundingBox gt;
    Batch batch;
    int frame_index = -1;
    for (std::size_t attempt = 0; attempt < video.frames.size() && frame_index < 0; ++attempt) {
      const int f = pick(rng);
      frame = prepare_frame(video.frames[static_cast<std::size_t>(f)], cfg.preprocess);
      gt = scale_box(video.ground_truth[static_cast<std::size_t>(f)], frame.scale);
      auto pos = draw_positive_samples(gt, cfg.batch_positives, cfg.sampler, frame.width, frame.height, rng);
      if (pos.empty()) {
        ++report.skipped_frames;
        report.warnings.push_back("video '" + video.name + "' frame " + std::to_string(f) +
                                  ": no positive samples, frame skipped");
        continue;
      }
      auto neg = draw_negative_samples(gt, cfg.batch_negatives, cfg.sampler, frame.width, frame.height, rng);
      batch.boxes = pos;
      batch.boxes.insert(batch.boxes.end(), neg.begin(), neg.end());
      batch.labels.assign(pos.size(), kTarget);
      batch.labels.insert(batch.labels.end(), neg.size(), kBackground);
      frame_index = f;
    }
    if (frame_index < 0) throw std::runtime_error("every frame of video '" + video.name + "' was skipped");

    const Mode trunk_mode = cfg.train_trunk ? Mode::Train : Mode::Infer;
    const Tensor<float> featmap = net.forward_shared(frame.tensor, trunk_mode);
    const FeatureExtent extent{featmap.dim(3), featmap.dim(2)};
    const auto rois = boxes_to_rois(batch.boxes, net.feature_stride(), extent, cfg.roi_offset);
    const Tensor<float> logits = net.score_rois(featmap, rois, d, Mode::Train);
    const LossResult<float> loss = softmax_cross_entropy(logits, batch.labels);
    const Tensor<float> grad_pooled = net.backward_fc(loss.grad);
    std::vector<Param<float>*> params = net.fc_params();
    if (cfg.train_trunk) {
      net.backward_trunk(grad_pooled);
      const auto trunk = net.trunk_params();
      params.insert(params.begin(), trunk.begin(), trunk.end());
    }
    for (Param<float>* p : net.branch_params(d)) params.push_back(p);
    sgd_step<float>(params, cfg.sgd);

    report.loss.push_back(loss.loss);
    report.domain.push_back(d);
    report.frame.push_back(frame_index);
    if (hook) hook(it, d, net);
  }
  return report;
}

}  // namespace fdt
