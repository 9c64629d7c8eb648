#include "fdt/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace fdt {

namespace {

BoundingBox jitter_box(const BoundingBox& base, double dx, double dy, double scale) {
  BoundingBox b = base;
  b.w = base.w * scale;
  b.h = base.h * scale;
  b.x = base.x + dx - 0.5 * (b.w - base.w);
  b.y = base.y + dy - 0.5 * (b.h - base.h);
  return b;
}

}  // namespace

std::vector<BoundingBox> draw_candidates(const BoundingBox& prev, int n, const JitterParams& jitter, double frame_w,
                                         double frame_h, std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("candidate count must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double size = 0.5 * (prev.w + prev.h);
  std::vector<BoundingBox> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double dx = jitter.trans_factor * size * gauss(rng);
    const double dy = jitter.trans_factor * size * gauss(rng);
    const double scale = std::pow(jitter.scale_base, jitter.scale_std * gauss(rng));
    out.push_back(clip_to_frame(jitter_box(prev, dx, dy, scale), frame_w, frame_h));
  }
  return out;
}

LabelPartition label_samples(std::span<const BoundingBox> boxes, const BoundingBox& gt, double t1, double t2) {
  if (!(t1 > t2)) throw std::invalid_argument("label thresholds require t1 > t2");
  LabelPartition p;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double o = iou(boxes[i], gt);
    const int idx = static_cast<int>(i);
    if (o > t1)
      p.positives.push_back(idx);
    else if (o < t2)
      p.negatives.push_back(idx);
    else
      p.discarded.push_back(idx);
  }
  return p;
}

std::vector<BoundingBox> draw_positive_samples(const BoundingBox& gt, int n, const SamplerConfig& cfg, double frame_w,
                                               double frame_h, std::mt19937_64& rng) {
  std::vector<BoundingBox> out;
  if (n <= 0) return out;
  for (int round = 0; round < cfg.max_rounds && static_cast<int>(out.size()) < n; ++round) {
    const auto boxes = draw_candidates(gt, 2 * n, cfg.positive_jitter, frame_w, frame_h, rng);
    for (const auto& b : boxes) {
      if (iou(b, gt) > cfg.t1) out.push_back(b);
      if (static_cast<int>(out.size()) == n) break;
    }
  }
  return out;
}

std::vector<BoundingBox> draw_negative_samples(const BoundingBox& gt, int n, const SamplerConfig& cfg, double frame_w,
                                               double frame_h, std::mt19937_64& rng) {
  std::vector<BoundingBox> out;
  if (n <= 0) return out;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> fx(0.0, frame_w), fy(0.0, frame_h);
  const double size = 0.5 * (gt.w + gt.h);
  const int near_quota = (n + 1) / 2;
  int near = 0;
  for (int round = 0; round < cfg.max_rounds * n && static_cast<int>(out.size()) < n; ++round) {
    const double scale = std::pow(1.05, cfg.neg_scale_std * unit(rng));
    BoundingBox b;
    if (near < near_quota) {
      b = jitter_box(gt, cfg.neg_trans_range * size * unit(rng), cfg.neg_trans_range * size * unit(rng), scale);
    } else {
      b = BoundingBox::from_center(fx(rng), fy(rng), gt.w * scale, gt.h * scale);
    }
    b = clip_to_frame(b, frame_w, frame_h);
    if (iou(b, gt) < cfg.t2) {
      out.push_back(b);
      if (near < near_quota) ++near;
    }
  }
  return out;
}

std::vector<int> select_hard_negatives(std::span<const double> scores, int top_k) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_k, 0)), idx.size());
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
  idx.resize(k);
  return idx;
}

template <typename T>
std::vector<int> hard_negative_mine(Network<T>& net, const Tensor<T>& featmap, std::span<const RoI> negatives,
                                    int top_k, int branch) {
  if (top_k > static_cast<int>(negatives.size()))
    throw std::invalid_argument("hard negative mining asks for more samples than available");
  const auto scores = margins(net.score_rois(featmap, negatives, branch, Mode::Infer));
  return select_hard_negatives(scores, top_k);
}

template std::vector<int> hard_negative_mine(Network<float>&, const Tensor<float>&, std::span<const RoI>, int, int);
template std::vector<int> hard_negative_mine(Network<double>&, const Tensor<double>&, std::span<const RoI>, int, int);

// ---------------------------------------------------------------------------

SampleBuffer::SampleBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("sample buffer capacity must be >= 1");
}

bool SampleBuffer::push(FrameSamples batch, double score, double threshold) {
  if (!(score > threshold)) return false;
  push(std::move(batch));
  return true;
}

void SampleBuffer::push(FrameSamples batch) {
  require_shape(batch.samples.empty() || (!batch.features.empty() &&
                                          static_cast<std::size_t>(batch.features.dim(0)) == batch.samples.size()),
                "frame samples and feature rows disagree");
  frames_.push_back(std::move(batch));
  while (frames_.size() > capacity_) frames_.pop_front();
}

Tensor<float> gather_rows(const Tensor<float>& features, std::span<const int> rows) {
  if (rows.empty()) return {};
  const std::size_t width = features.row_size();
  std::vector<float> data(rows.size() * width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(data.data() + i * width, features.data() + static_cast<std::size_t>(rows[i]) * width,
                width * sizeof(float));
  return Tensor<float>({static_cast<int>(rows.size()), static_cast<int>(width)}, std::move(data));
}

CollectedSamples SampleBuffer::collect() const {
  std::size_t total = 0, width = 0;
  for (const auto& f : frames_) {
    total += f.samples.size();
    if (!f.features.empty()) width = f.features.row_size();
  }
  if (total == 0) throw EmptyBufferError();
  CollectedSamples out;
  std::vector<float> pos, neg;
  for (const auto& f : frames_) {
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
      const float* row = f.features.data() + i * width;
      if (f.samples[i].label == kTarget) {
        out.positives.push_back(f.samples[i]);
        pos.insert(pos.end(), row, row + width);
      } else {
        out.negatives.push_back(f.samples[i]);
        neg.insert(neg.end(), row, row + width);
      }
    }
  }
  const int w = static_cast<int>(width);
  if (!out.positives.empty())
    out.positive_features = Tensor<float>({static_cast<int>(out.positives.size()), w}, std::move(pos));
  if (!out.negatives.empty())
    out.negative_features = Tensor<float>({static_cast<int>(out.negatives.size()), w}, std::move(neg));
  return out;
}

}  // namespace fdt
