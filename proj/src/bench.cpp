#include "fdt/bench.hpp"

#include <chrono>
#include <stdexcept>

#include "fdt/loss.hpp"
#include "fdt/roi.hpp"
#include "fdt/sampling.hpp"

namespace fdt {

namespace {

using Clock = std::chrono::steady_clock;

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

}  // namespace

BenchResult run_bench(Network<float>& net, int frame_count, const FrameLoader& load,
                      std::span<const BoundingBox> ground_truth, const BenchConfig& cfg) {
  if (cfg.candidates < 1) throw std::invalid_argument("bench needs at least one candidate");
  if (ground_truth.empty()) throw std::invalid_argument("bench needs a ground-truth box for frame 1");
  if (net.spec().trunk_extent(cfg.crop_size) < 1)
    throw std::invalid_argument("crop size " + std::to_string(cfg.crop_size) + " is too small for the trunk");

  BenchResult res;
  res.frames = cfg.frames > 0 ? std::min(cfg.frames, frame_count) : frame_count;
  res.candidates = cfg.candidates;
  std::mt19937_64 rng(cfg.seed);

  for (int f = 0; f < res.frames; ++f) {
    const Image img = load(f);
    const BoundingBox center = ground_truth[std::min<std::size_t>(static_cast<std::size_t>(f), ground_truth.size() - 1)];
    const auto boxes = draw_candidates(center, cfg.candidates, cfg.jitter, img.width, img.height, rng);

    // Shared: one trunk pass, then RoI pooling on working-resolution boxes.
    net.reset_conv_passes();
    auto t0 = Clock::now();
    const PreparedFrame frame = prepare_frame(img, cfg.preprocess);
    const Tensor<float> featmap = net.forward_shared(frame.tensor, Mode::Infer);
    std::vector<BoundingBox> scaled;
    scaled.reserve(boxes.size());
    for (const auto& b : boxes) scaled.push_back(scale_box(b, frame.scale));
    const FeatureExtent extent{featmap.dim(3), featmap.dim(2)};
    const auto rois = boxes_to_rois(scaled, net.feature_stride(), extent, cfg.roi_offset);
    res.shared.best.push_back(argmax(margins(net.score_rois(featmap, rois, 0, Mode::Infer))));
    res.shared.seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    res.shared.conv_passes += net.conv_passes();

    // Crop: one trunk pass per candidate.
    net.reset_conv_passes();
    t0 = Clock::now();
    std::vector<double> scores;
    scores.reserve(boxes.size());
    for (const auto& b : boxes) {
      const Tensor<float> crop = crop_to_tensor(img, b, cfg.crop_size, cfg.preprocess.mean);
      const Tensor<float> fm = net.forward_shared(crop, Mode::Infer);
      const RoI whole{0.0, 0.0, static_cast<double>(fm.dim(3)), static_cast<double>(fm.dim(2)), 0};
      scores.push_back(margins(net.score_rois(fm, std::span<const RoI>(&whole, 1), 0, Mode::Infer)).front());
    }
    res.crop.best.push_back(argmax(scores));
    res.crop.seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    res.crop.conv_passes += net.conv_passes();
  }
  return res;
}

}  // namespace fdt
