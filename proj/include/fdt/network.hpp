#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdt/layers.hpp"
#include "fdt/roi.hpp"
#include "fdt/tensor.hpp"

namespace fdt {

enum class Variant { Default, Conv5, Fc2 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct NetworkSpec {
  /// Shared convolutional trunk, applied once per frame.
  std::vector<LayerConfig> trunk;
  RoiMethod roi_method = RoiMethod::Align;
  RoiParams roi;
  /// Fully-connected layers between the RoI layer and the head.
  std::vector<LayerConfig> fc_trunk;
  /// Number of domain branches in the last layer; each maps to 2 logits.
  int head_branches = 1;
  double head_init_std = 0.01;
  std::uint64_t seed = 1;

  /// Three conv layers, RoIAlign 3x3x512, fc4/fc5 with dropout, k branches.
  static NetworkSpec make(Variant variant = Variant::Default, int branches = 1);

  void validate() const;

  int trunk_channels() const;
  int input_channels() const;
  /// Product of conv/pool strides up to the RoI layer.
  int feature_stride() const;
  /// Image x coordinate of the receptive-field center of feature column 0.
  double feature_offset() const;
  /// Spatial trunk output for an input of `in` pixels, 0 if too small.
  int trunk_extent(int in) const;
  /// Length of the flattened pooled feature (C * out_h * out_w).
  int pooled_size() const;
  int head_input_size() const;
};

/**
 * The tracking network: conv trunk -> RoI layer -> FC trunk -> one of k
 * two-way branches.
 *
 * Forward calls in Train mode cache what the matching backward needs; the
 * backward methods consume the most recent Train-mode forward.
 */
template <typename T>
class Network {
 public:
  explicit Network(NetworkSpec spec);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Deep copy, parameters included.
  Network clone() const;

  const NetworkSpec& spec() const { return spec_; }
  int branches() const { return static_cast<int>(heads_.size()); }
  int feature_stride() const { return spec_.feature_stride(); }

  /// One conv-trunk pass over a 1 x C x H x W frame.
  Tensor<T> forward_shared(const Tensor<T>& frame, Mode mode = Mode::Infer);
  std::uint64_t conv_passes() const { return conv_passes_; }
  void reset_conv_passes() { conv_passes_ = 0; }

  /// RoI layer only.
  PooledFeature<T> pool(const Tensor<T>& featmap, std::span<const RoI> rois) const;

  /// RoI layer + FC trunk + branch `branch`. Returns n x 2 logits (empty for no RoIs).
  Tensor<T> score_rois(const Tensor<T>& featmap, std::span<const RoI> rois, int branch, Mode mode);

  /// FC trunk + branch on already pooled features (rows x pooled_size()).
  Tensor<T> score_pooled(const Tensor<T>& features, int branch, Mode mode);

  /// Back-propagates logits gradient through the active branch and the FC
  /// trunk, accumulating parameter gradients. Returns the pooled-feature gradient.
  Tensor<T> backward_fc(const Tensor<T>& grad_logits);

  /// Continues from backward_fc through the RoI layer and the conv trunk.
  /// Requires the last score to come from score_rois after a Train-mode forward_shared.
  void backward_trunk(const Tensor<T>& grad_pooled);

  /// Replaces the head with `new_k` fresh Gaussian branches, biases zero.
  void swap_head(int new_k, double init_std, std::uint64_t seed);

  /// Re-draws every FC-trunk parameter from its initializer.
  void reinit_fc_trunk(std::uint64_t seed);

  void reseed_dropout(std::uint64_t seed);
  void set_trunk_learnable(bool learnable);

  std::vector<Param<T>*> trunk_params();
  std::vector<Param<T>*> fc_params();
  std::vector<Param<T>*> branch_params(int branch);
  std::vector<Param<T>*> all_params();
  /// Every parameter in checkpoint order (trunk, FC trunk, head).
  std::vector<const Param<T>*> named_params() const;

 private:
  void check_branch(int branch) const;

  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> trunk_;
  std::vector<std::unique_ptr<Layer<T>>> fc_trunk_;
  std::vector<std::unique_ptr<Layer<T>>> heads_;
  std::uint64_t conv_passes_ = 0;

  int active_branch_ = -1;
  PooledFeature<T> pooled_cache_;
  std::vector<int> featmap_shape_;
  bool trunk_cached_ = false;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace fdt
