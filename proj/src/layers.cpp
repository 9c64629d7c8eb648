#include "fdt/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdt {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::Lrn: return "lrn";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Fc: return "fc";
    case LayerKind::Dropout: return "dropout";
  }
  return "?";
}

void LayerConfig::validate() const {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("layer '" + name + "' (" + to_string(kind) + "): " + why);
  };
  switch (kind) {
    case LayerKind::Conv:
      if (in_channels < 1 || out_channels < 1) fail("channel counts must be >= 1");
      if (kernel < 1) fail("kernel must be >= 1");
      if (stride < 1) fail("stride must be >= 1");
      if (pad < 0) fail("pad must be >= 0");
      break;
    case LayerKind::MaxPool:
      if (kernel < 1) fail("kernel must be >= 1");
      if (stride < 1) fail("stride must be >= 1");
      break;
    case LayerKind::Fc:
      if (in_channels < 1 || out_channels < 1) fail("fc dimensions must be >= 1");
      break;
    case LayerKind::Lrn:
      if (lrn.depth < 1 || lrn.depth % 2 == 0) fail("lrn depth must be odd and >= 1");
      if (!(lrn.k > 0)) fail("lrn k must be > 0");
      break;
    case LayerKind::Dropout:
      if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout rate must lie in [0, 1)");
      break;
    case LayerKind::Relu: break;
  }
  if (init_std < 0) fail("init_std must be >= 0");
}

LayerConfig LayerConfig::conv(std::string name, int in, int out, int kernel, int stride, int pad) {
  LayerConfig c;
  c.kind = LayerKind::Conv;
  c.name = std::move(name);
  c.in_channels = in;
  c.out_channels = out;
  c.kernel = kernel;
  c.stride = stride;
  c.pad = pad;
  return c;
}

LayerConfig LayerConfig::relu(std::string name) {
  LayerConfig c;
  c.kind = LayerKind::Relu;
  c.name = std::move(name);
  return c;
}

LayerConfig LayerConfig::local_response_norm(std::string name, LrnParams p) {
  LayerConfig c;
  c.kind = LayerKind::Lrn;
  c.name = std::move(name);
  c.lrn = p;
  return c;
}

LayerConfig LayerConfig::maxpool(std::string name, int kernel, int stride) {
  LayerConfig c;
  c.kind = LayerKind::MaxPool;
  c.name = std::move(name);
  c.kernel = kernel;
  c.stride = stride;
  return c;
}

LayerConfig LayerConfig::fc(std::string name, int in, int out, double init_std) {
  LayerConfig c;
  c.kind = LayerKind::Fc;
  c.name = std::move(name);
  c.in_channels = in;
  c.out_channels = out;
  c.init_std = init_std;
  return c;
}

LayerConfig LayerConfig::dropout(std::string name, double rate) {
  LayerConfig c;
  c.kind = LayerKind::Dropout;
  c.name = std::move(name);
  c.dropout_rate = rate;
  return c;
}

template <typename T>
void gaussian_fill(Tensor<T>& t, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

// ---------------------------------------------------------------------------
// Convolution through patch-matrix lowering.

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRow = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapRow = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  int channels, height, width, kernel, stride, pad, out_h, out_w;
  int patch() const { return channels * kernel * kernel; }
  int positions() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const std::vector<int>& in, const std::vector<int>& w, int stride, int pad) {
  require_shape(in.size() == 4, "conv2d input must be NCHW, got " + shape_to_string(in));
  require_shape(w.size() == 4, "conv2d weights must be KCkhkw, got " + shape_to_string(w));
  require_shape(in[1] == w[1], "conv2d input has " + std::to_string(in[1]) + " channels but weights expect " +
                                   std::to_string(w[1]) + " (input " + shape_to_string(in) + ", weights " +
                                   shape_to_string(w) + ")");
  require_shape(w[2] == w[3], "conv2d kernels must be square, got " + shape_to_string(w));
  if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
  if (pad < 0) throw ShapeError("conv2d pad must be >= 0");
  ConvGeometry g{in[1], in[2], in[3], w[2], stride, pad, 0, 0};
  const int span_h = g.height + 2 * pad - g.kernel;
  const int span_w = g.width + 2 * pad - g.kernel;
  require_shape(span_h >= 0 && span_w >= 0, "conv2d kernel " + std::to_string(g.kernel) +
                                                " exceeds padded input " + shape_to_string(in));
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;
  return g;
}

template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
  const int P = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        T* row = cols + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * P;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* img) {
  const int P = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        const T* row = cols + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * P;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.height) continue;
          T* dst = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          const T* src = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias, int stride,
                         int pad) {
  const ConvGeometry g = conv_geometry(input.shape(), weights.shape(), stride, pad);
  const int K = weights.dim(0);
  require_shape(bias.size() == static_cast<std::size_t>(K),
                "conv2d bias has " + std::to_string(bias.size()) + " entries, expected " + std::to_string(K));
  const int N = input.dim(0);
  Tensor<T> out({N, K, g.out_h, g.out_w});
  std::vector<T> cols(static_cast<std::size_t>(g.patch()) * g.positions());
  CMapRow<T> W(weights.data(), K, g.patch());
  CMapRow<T> C(cols.data(), g.patch(), g.positions());
  for (int n = 0; n < N; ++n) {
    im2col(input.data() + static_cast<std::size_t>(n) * input.row_size(), g, cols.data());
    MapRow<T> O(out.data() + static_cast<std::size_t>(n) * out.row_size(), K, g.positions());
    O.noalias() = W * C;
    for (int k = 0; k < K; ++k) O.row(k).array() += bias[static_cast<std::size_t>(k)];
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_out, int stride,
                             int pad, bool want_input_grad) {
  const ConvGeometry g = conv_geometry(input.shape(), weights.shape(), stride, pad);
  const int K = weights.dim(0);
  const int N = input.dim(0);
  require_shape(grad_out.shape() == std::vector<int>{N, K, g.out_h, g.out_w},
                "conv2d grad_out shape " + grad_out.shape_str() + " does not match forward output");
  ConvGrads<T> grads;
  grads.weights = Tensor<T>(weights.shape());
  grads.bias = Tensor<T>({K});
  if (want_input_grad) grads.input = Tensor<T>(input.shape());

  std::vector<T> cols(static_cast<std::size_t>(g.patch()) * g.positions());
  std::vector<T> dcols(want_input_grad ? cols.size() : 0);
  CMapRow<T> W(weights.data(), K, g.patch());
  MapRow<T> dW(grads.weights.data(), K, g.patch());
  MapRow<T> C(cols.data(), g.patch(), g.positions());
  for (int n = 0; n < N; ++n) {
    CMapRow<T> G(grad_out.data() + static_cast<std::size_t>(n) * grad_out.row_size(), K, g.positions());
    im2col(input.data() + static_cast<std::size_t>(n) * input.row_size(), g, cols.data());
    dW.noalias() += G * C.transpose();
    for (int k = 0; k < K; ++k) grads.bias[static_cast<std::size_t>(k)] += G.row(k).sum();
    if (want_input_grad) {
      MapRow<T> dC(dcols.data(), g.patch(), g.positions());
      dC.noalias() = W.transpose() * G;
      col2im(dcols.data(), g, grads.input.data() + static_cast<std::size_t>(n) * input.row_size());
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
  require_shape(input.shape() == grad_out.shape(), "relu grad shape " + grad_out.shape_str() +
                                                       " does not match input " + input.shape_str());
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input[i] > T(0))) g[i] = T(0);
  return g;
}

// ---------------------------------------------------------------------------
// LRN over the channel axis of an NCHW tensor.

namespace {

void check_lrn(const std::vector<int>& shape, const LrnParams& p) {
  require_shape(shape.size() == 4, "lrn input must be NCHW, got " + shape_to_string(shape));
  if (p.depth < 1 || p.depth % 2 == 0) throw std::invalid_argument("lrn depth must be odd and >= 1");
  if (!(p.k > 0)) throw std::invalid_argument("lrn requires k > 0");
}

/// scale[c] = k + alpha/depth * sum_{|c'-c| <= depth/2} in[c']^2, per spatial position.
template <typename T>
std::vector<T> lrn_scale(const Tensor<T>& in, const LrnParams& p) {
  const int N = in.dim(0), C = in.dim(1);
  const std::size_t plane = static_cast<std::size_t>(in.dim(2)) * in.dim(3);
  const int half = p.depth / 2;
  const T coeff = static_cast<T>(p.alpha / p.depth);
  std::vector<T> scale(in.size());
  for (int n = 0; n < N; ++n) {
    const T* x = in.data() + static_cast<std::size_t>(n) * C * plane;
    T* s = scale.data() + static_cast<std::size_t>(n) * C * plane;
    for (int c = 0; c < C; ++c) {
      T* sc = s + c * plane;
      std::fill(sc, sc + plane, static_cast<T>(p.k));
      for (int j = std::max(0, c - half); j <= std::min(C - 1, c + half); ++j) {
        const T* xj = x + j * plane;
        for (std::size_t i = 0; i < plane; ++i) sc[i] += coeff * xj[i] * xj[i];
      }
    }
  }
  return scale;
}

}  // namespace

template <typename T>
Tensor<T> lrn_forward(const Tensor<T>& input, const LrnParams& p) {
  check_lrn(input.shape(), p);
  const std::vector<T> scale = lrn_scale(input, p);
  Tensor<T> out = input;
  const T beta = static_cast<T>(p.beta);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = input[i] * std::pow(scale[i], -beta);
  return out;
}

template <typename T>
Tensor<T> lrn_backward(const Tensor<T>& input, const Tensor<T>& grad_out, const LrnParams& p) {
  check_lrn(input.shape(), p);
  require_shape(input.shape() == grad_out.shape(), "lrn grad shape mismatch");
  const int N = input.dim(0), C = input.dim(1);
  const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
  const int half = p.depth / 2;
  const std::vector<T> scale = lrn_scale(input, p);
  const T beta = static_cast<T>(p.beta);
  const T coeff = static_cast<T>(2.0 * p.alpha * p.beta / p.depth);
  // t[c] = g[c] * x[c] * s[c]^(-beta-1)
  std::vector<T> t(input.size());
  Tensor<T> grad(input.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = grad_out[i] * input[i] * std::pow(scale[i], -beta - T(1));
    grad[i] = grad_out[i] * std::pow(scale[i], -beta);
  }
  for (int n = 0; n < N; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * C * plane;
    for (int j = 0; j < C; ++j) {
      T* gj = grad.data() + base + j * plane;
      const T* xj = input.data() + base + j * plane;
      for (int c = std::max(0, j - half); c <= std::min(C - 1, j + half); ++c) {
        const T* tc = t.data() + base + c * plane;
        for (std::size_t i = 0; i < plane; ++i) gj[i] -= coeff * xj[i] * tc[i];
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, int kernel, int stride) {
  require_shape(input.rank() == 4, "maxpool input must be NCHW, got " + input.shape_str());
  if (kernel < 1 || stride < 1) throw ShapeError("maxpool kernel and stride must be >= 1");
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  require_shape(kernel <= H && kernel <= W, "maxpool window " + std::to_string(kernel) + " exceeds input " +
                                                input.shape_str());
  const int OH = (H - kernel) / stride + 1, OW = (W - kernel) / stride + 1;
  MaxPoolResult<T> r{Tensor<T>({N, C, OH, OW}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t plane = (static_cast<std::size_t>(n) * C + c) * H * W;
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox, ++o) {
          std::size_t best = plane + static_cast<std::size_t>(oy * stride) * W + ox * stride;
          for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
              const std::size_t idx = plane + static_cast<std::size_t>(oy * stride + ky) * W + ox * stride + kx;
              if (input[idx] > input[best]) best = idx;
            }
          r.output[o] = input[best];
          r.argmax[o] = best;
        }
    }
  return r;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                           const std::vector<int>& input_shape) {
  require_shape(argmax.size() == grad_out.size(), "maxpool argmax record does not match grad_out");
  Tensor<T> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_out[i];
  return grad;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  require_shape(weights.rank() == 2, "fc weights must be rank 2, got " + weights.shape_str());
  const int O = weights.dim(0), D = weights.dim(1);
  require_shape(!input.empty() && input.row_size() == static_cast<std::size_t>(D),
                "fc input " + input.shape_str() + " does not flatten to " + std::to_string(D) + " features");
  require_shape(bias.size() == static_cast<std::size_t>(O), "fc bias size mismatch");
  const int N = input.dim(0);
  Tensor<T> out({N, O});
  CMapRow<T> X(input.data(), N, D);
  CMapRow<T> Wm(weights.data(), O, D);
  MapRow<T> Y(out.data(), N, O);
  Y.noalias() = X * Wm.transpose();
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o) Y(n, o) += bias[static_cast<std::size_t>(o)];
  return out;
}

template <typename T>
ConvGrads<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_out) {
  const int O = weights.dim(0), D = weights.dim(1);
  const int N = input.dim(0);
  require_shape(grad_out.shape() == std::vector<int>{N, O}, "fc grad_out shape " + grad_out.shape_str() +
                                                                " does not match forward output");
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weights.shape()), Tensor<T>({O})};
  CMapRow<T> X(input.data(), N, D);
  CMapRow<T> Wm(weights.data(), O, D);
  CMapRow<T> G(grad_out.data(), N, O);
  MapRow<T>(g.input.data(), N, D).noalias() = G * Wm;
  MapRow<T>(g.weights.data(), O, D).noalias() = G.transpose() * X;
  for (int o = 0; o < O; ++o) g.bias[static_cast<std::size_t>(o)] = G.col(o).sum();
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, double rate, Mode mode, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  DropoutResult<T> r{input, {}};
  if (mode == Mode::Infer || rate == 0.0) return r;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::bernoulli_distribution drop(rate);
  r.mask.resize(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    r.mask[i] = drop(rng) ? T(0) : keep_scale;
    r.output[i] *= r.mask[i];
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const std::vector<T>& mask) {
  if (mask.empty()) return grad_out;
  require_shape(mask.size() == grad_out.size(), "dropout mask does not match grad_out");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return g;
}

// ---------------------------------------------------------------------------
// Layer wrappers.

namespace {

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(const LayerConfig& cfg, std::mt19937_64& rng)
      : Layer<T>(cfg),
        weights_(cfg.name + ".weight", Tensor<T>({cfg.out_channels, cfg.in_channels, cfg.kernel, cfg.kernel})),
        bias_(cfg.name + ".bias", Tensor<T>({cfg.out_channels})) {
    const double fan_in = static_cast<double>(cfg.in_channels) * cfg.kernel * cfg.kernel;
    gaussian_fill(weights_.value, cfg.init_std > 0 ? cfg.init_std : std::sqrt(2.0 / fan_in), rng);
  }

  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    if (mode == Mode::Train) input_ = input;
    return conv2d_forward(input, weights_.value, bias_.value, this->cfg_.stride, this->cfg_.pad);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override { return run_backward(grad_out, true); }
  void backward_params_only(const Tensor<T>& grad_out) override { run_backward(grad_out, false); }

  std::vector<Param<T>*> params() override { return {&weights_, &bias_}; }

 private:
  Tensor<T> run_backward(const Tensor<T>& grad_out, bool want_input) {
    require_shape(!input_.empty(), "conv backward called without a train-mode forward");
    ConvGrads<T> g = conv2d_backward(input_, weights_.value, grad_out, this->cfg_.stride, this->cfg_.pad, want_input);
    for (std::size_t i = 0; i < g.weights.size(); ++i) weights_.grad[i] += g.weights[i];
    for (std::size_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
  }

  Param<T> weights_;
  Param<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    Tensor<T> out = relu_forward(input);
    if (mode == Mode::Train) output_ = out;
    return out;
  }
  // relu(x) > 0 iff x > 0, so the output doubles as the mask.
  Tensor<T> backward(const Tensor<T>& grad_out) override { return relu_backward(output_, grad_out); }

 private:
  Tensor<T> output_;
};

template <typename T>
class LrnLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    if (mode == Mode::Train) input_ = input;
    return lrn_forward(input, this->cfg_.lrn);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override { return lrn_backward(input_, grad_out, this->cfg_.lrn); }

 private:
  Tensor<T> input_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    MaxPoolResult<T> r = maxpool_forward(input, this->cfg_.kernel, this->cfg_.stride);
    if (mode == Mode::Train) {
      input_shape_ = input.shape();
      argmax_ = std::move(r.argmax);
    }
    return std::move(r.output);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override { return maxpool_backward(grad_out, argmax_, input_shape_); }

 private:
  std::vector<int> input_shape_;
  std::vector<std::size_t> argmax_;
};

template <typename T>
class FcLayer final : public Layer<T> {
 public:
  FcLayer(const LayerConfig& cfg, std::mt19937_64& rng)
      : Layer<T>(cfg),
        weights_(cfg.name + ".weight", Tensor<T>({cfg.out_channels, cfg.in_channels})),
        bias_(cfg.name + ".bias", Tensor<T>({cfg.out_channels})) {
    gaussian_fill(weights_.value, cfg.init_std > 0 ? cfg.init_std : std::sqrt(2.0 / cfg.in_channels), rng);
  }

  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    if (mode == Mode::Train) input_ = input;
    return linear_forward(input, weights_.value, bias_.value);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    require_shape(!input_.empty(), "fc backward called without a train-mode forward");
    ConvGrads<T> g = linear_backward(input_, weights_.value, grad_out);
    for (std::size_t i = 0; i < g.weights.size(); ++i) weights_.grad[i] += g.weights[i];
    for (std::size_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
  }

  std::vector<Param<T>*> params() override { return {&weights_, &bias_}; }

 private:
  Param<T> weights_;
  Param<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(const LayerConfig& cfg, std::mt19937_64& rng) : Layer<T>(cfg), rng_(rng()) {}

  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    DropoutResult<T> r = dropout_forward(input, this->cfg_.dropout_rate, mode, rng_);
    if (mode == Mode::Train) mask_ = std::move(r.mask);
    return std::move(r.output);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override { return dropout_backward(grad_out, mask_); }
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

 private:
  std::mt19937_64 rng_;
  std::vector<T> mask_;
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  switch (cfg.kind) {
    case LayerKind::Conv: return std::make_unique<ConvLayer<T>>(cfg, rng);
    case LayerKind::Relu: return std::make_unique<ReluLayer<T>>(cfg);
    case LayerKind::Lrn: return std::make_unique<LrnLayer<T>>(cfg);
    case LayerKind::MaxPool: return std::make_unique<MaxPoolLayer<T>>(cfg);
    case LayerKind::Fc: return std::make_unique<FcLayer<T>>(cfg, rng);
    case LayerKind::Dropout: return std::make_unique<DropoutLayer<T>>(cfg, rng);
  }
  throw std::invalid_argument("unknown layer kind");
}

#define FDT_INSTANTIATE_LAYERS(T)                                                                                  \
  template void gaussian_fill<T>(Tensor<T>&, double, std::mt19937_64&);                                          \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);           \
  template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int, bool); \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                                                          \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> lrn_forward<T>(const Tensor<T>&, const LrnParams&);                                         \
  template Tensor<T> lrn_backward<T>(const Tensor<T>&, const Tensor<T>&, const LrnParams&);                      \
  template MaxPoolResult<T> maxpool_forward<T>(const Tensor<T>&, int, int);                                      \
  template Tensor<T> maxpool_backward<T>(const Tensor<T>&, const std::vector<std::size_t>&,                      \
                                         const std::vector<int>&);                                               \
  template Tensor<T> linear_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template ConvGrads<T> linear_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template DropoutResult<T> dropout_forward<T>(const Tensor<T>&, double, Mode, std::mt19937_64&);                \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, const std::vector<T>&);                               \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerConfig&, std::mt19937_64&);

FDT_INSTANTIATE_LAYERS(float)
FDT_INSTANTIATE_LAYERS(double)

}  // namespace fdt
