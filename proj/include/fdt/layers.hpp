#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fdt/tensor.hpp"

namespace fdt {

enum class Mode { Train, Infer };

enum class LayerKind { Conv, Relu, Lrn, MaxPool, Fc, Dropout };

std::string to_string(LayerKind kind);

/// Cross-channel local response normalization constants.
/// out_c = in_c * (k + alpha / depth * sum_{window} in^2) ^ -beta
struct LrnParams {
  int depth = 5;
  double k = 2.0;
  double alpha = 1e-4;
  double beta = 0.75;
};

struct LayerConfig {
  LayerKind kind = LayerKind::Relu;
  std::string name;
  // conv / fc
  int in_channels = 0;
  int out_channels = 0;
  // conv / maxpool
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  double dropout_rate = 0.0;
  LrnParams lrn;
  /// Gaussian init std for conv/fc weights; 0 selects He scaling sqrt(2 / fan_in).
  double init_std = 0.0;

  /// Throws std::invalid_argument naming the failing constraint.
  void validate() const;

  static LayerConfig conv(std::string name, int in, int out, int kernel, int stride, int pad);
  static LayerConfig relu(std::string name = "relu");
  static LayerConfig local_response_norm(std::string name = "lrn", LrnParams p = {});
  static LayerConfig maxpool(std::string name, int kernel, int stride);
  static LayerConfig fc(std::string name, int in, int out, double init_std = 0.01);
  static LayerConfig dropout(std::string name, double rate);
};

// ---------------------------------------------------------------------------
// Stateless forward/backward kernels.

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// input N x C x H x W, weights K x C x kh x kw, bias K.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias, int stride, int pad);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_out, int stride,
                             int pad, bool want_input_grad = true);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);

/// Gradient passes only where input > 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> lrn_forward(const Tensor<T>& input, const LrnParams& p);

template <typename T>
Tensor<T> lrn_backward(const Tensor<T>& input, const Tensor<T>& grad_out, const LrnParams& p);

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  /// Flat input index of the winning element for every output element.
  std::vector<std::size_t> argmax;
};

/// Ties resolve to the first element in row-major window order.
template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, int kernel, int stride);

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                           const std::vector<int>& input_shape);

/// input is N x D (any trailing shape is flattened), weights O x D, bias O; out = W x + b per row.
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

template <typename T>
ConvGrads<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_out);

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  /// Per-element multiplier: 0 for dropped, 1/(1-rate) for survivors. Empty in infer mode.
  std::vector<T> mask;
};

/// Inverted dropout: survivors are scaled at train time so inference is the identity.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, double rate, Mode mode, std::mt19937_64& rng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const std::vector<T>& mask);

// ---------------------------------------------------------------------------
// Stateful layers used by the network. Each caches what its backward pass
// needs during a Train-mode forward.

template <typename T>
class Layer {
 public:
  explicit Layer(LayerConfig cfg) : cfg_(std::move(cfg)) {}
  virtual ~Layer() = default;

  virtual Tensor<T> forward(const Tensor<T>& input, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  /// Accumulate parameter gradients only; skips the input gradient where that saves work.
  virtual void backward_params_only(const Tensor<T>& grad_out) { backward(grad_out); }
  virtual std::vector<Param<T>*> params() { return {}; }
  /// Reset any internal randomness (dropout masks).
  virtual void reseed(std::uint64_t) {}

  const LayerConfig& config() const { return cfg_; }
  const std::string& name() const { return cfg_.name; }

 protected:
  LayerConfig cfg_;
};

/// Builds a layer with Gaussian-initialized parameters drawn from `rng`.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerConfig& cfg, std::mt19937_64& rng);

/// Fill with N(0, std^2) samples.
template <typename T>
void gaussian_fill(Tensor<T>& t, double std, std::mt19937_64& rng);

}  // namespace fdt
