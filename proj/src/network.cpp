#include "fdt/network.hpp"

#include <stdexcept>

namespace fdt {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Default: return "default";
    case Variant::Conv5: return "conv5";
    case Variant::Fc2: return "fc2";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "default") return Variant::Default;
  if (s == "conv5") return Variant::Conv5;
  if (s == "fc2") return Variant::Fc2;
  throw std::invalid_argument("unknown network variant '" + s + "'");
}

NetworkSpec NetworkSpec::make(Variant variant, int branches) {
  NetworkSpec s;
  s.head_branches = branches;
  s.trunk = {
      LayerConfig::conv("conv1", 3, 96, 7, 2, 0),  LayerConfig::relu("relu1"),
      LayerConfig::local_response_norm("norm1"),   LayerConfig::maxpool("pool1", 3, 2),
      LayerConfig::conv("conv2", 96, 256, 5, 2, 0), LayerConfig::relu("relu2"),
      LayerConfig::local_response_norm("norm2"),   LayerConfig::maxpool("pool2", 3, 2),
      LayerConfig::conv("conv3", 256, 512, 3, 1, 1), LayerConfig::relu("relu3"),
  };
  if (variant == Variant::Conv5) {
    s.trunk.push_back(LayerConfig::conv("conv4", 512, 512, 3, 1, 1));
    s.trunk.push_back(LayerConfig::relu("relu4c"));
    s.trunk.push_back(LayerConfig::conv("conv5", 512, 512, 3, 1, 1));
    s.trunk.push_back(LayerConfig::relu("relu5c"));
  }
  const int pooled = 512 * s.roi.out_h * s.roi.out_w;
  s.fc_trunk = {LayerConfig::fc("fc4", pooled, 512), LayerConfig::relu("relu4"), LayerConfig::dropout("drop4", 0.5)};
  if (variant != Variant::Fc2) {
    s.fc_trunk.push_back(LayerConfig::fc("fc5", 512, 512));
    s.fc_trunk.push_back(LayerConfig::relu("relu5"));
    s.fc_trunk.push_back(LayerConfig::dropout("drop5", 0.5));
  }
  return s;
}

void NetworkSpec::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("invalid network spec: " + why); };
  if (trunk.empty()) fail("conv trunk is empty");
  if (trunk.front().kind != LayerKind::Conv) fail("conv trunk must start with a conv layer");
  int channels = trunk.front().in_channels;
  for (const auto& l : trunk) {
    l.validate();
    if (l.kind == LayerKind::Fc) fail("fc layer '" + l.name + "' inside the conv trunk");
    if (l.kind == LayerKind::Conv) {
      if (l.in_channels != channels)
        fail("layer '" + l.name + "' expects " + std::to_string(l.in_channels) + " channels, previous layer gives " +
             std::to_string(channels));
      channels = l.out_channels;
    }
  }
  if (roi.out_h < 1 || roi.out_w < 1 || roi.samples_h < 1 || roi.samples_w < 1) fail("roi sizes must be >= 1");
  int width = channels * roi.out_h * roi.out_w;
  for (const auto& l : fc_trunk) {
    l.validate();
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::MaxPool || l.kind == LayerKind::Lrn)
      fail("layer '" + l.name + "' not allowed after the RoI layer");
    if (l.kind == LayerKind::Fc) {
      if (l.in_channels != width)
        fail("layer '" + l.name + "' expects " + std::to_string(l.in_channels) + " inputs, previous layer gives " +
             std::to_string(width));
      width = l.out_channels;
    }
  }
  if (head_branches < 1) fail("head needs at least one branch");
  if (!(head_init_std > 0)) fail("head init std must be > 0");
}

int NetworkSpec::trunk_channels() const {
  int c = trunk.empty() ? 0 : trunk.front().in_channels;
  for (const auto& l : trunk)
    if (l.kind == LayerKind::Conv) c = l.out_channels;
  return c;
}

int NetworkSpec::input_channels() const { return trunk.empty() ? 0 : trunk.front().in_channels; }

int NetworkSpec::feature_stride() const {
  int s = 1;
  for (const auto& l : trunk)
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::MaxPool) s *= l.stride;
  return s;
}

double NetworkSpec::feature_offset() const {
  double start = 0, jump = 1;
  for (const auto& l : trunk) {
    if (l.kind != LayerKind::Conv && l.kind != LayerKind::MaxPool) continue;
    const int pad = l.kind == LayerKind::Conv ? l.pad : 0;
    start += ((l.kernel - 1) / 2.0 - pad) * jump;
    jump *= l.stride;
  }
  return start;
}

int NetworkSpec::trunk_extent(int in) const {
  int n = in;
  for (const auto& l : trunk) {
    if (l.kind != LayerKind::Conv && l.kind != LayerKind::MaxPool) continue;
    const int pad = l.kind == LayerKind::Conv ? l.pad : 0;
    const int span = n + 2 * pad - l.kernel;
    if (span < 0) return 0;
    n = span / l.stride + 1;
  }
  return n;
}

int NetworkSpec::pooled_size() const { return trunk_channels() * roi.out_h * roi.out_w; }

int NetworkSpec::head_input_size() const {
  int width = pooled_size();
  for (const auto& l : fc_trunk)
    if (l.kind == LayerKind::Fc) width = l.out_channels;
  return width;
}

// ---------------------------------------------------------------------------

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  for (const auto& cfg : spec_.trunk) trunk_.push_back(make_layer<T>(cfg, rng));
  for (const auto& cfg : spec_.fc_trunk) fc_trunk_.push_back(make_layer<T>(cfg, rng));
  swap_head(spec_.head_branches, spec_.head_init_std, rng());
}

template <typename T>
Network<T> Network<T>::clone() const {
  Network<T> copy(spec_);
  auto src = named_params();
  auto dst = copy.all_params();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = src[i]->value;
    dst[i]->velocity = src[i]->velocity;
    dst[i]->learnable = src[i]->learnable;
  }
  return copy;
}

template <typename T>
void Network<T>::check_branch(int branch) const {
  if (branch < 0 || branch >= branches())
    throw std::out_of_range("branch index " + std::to_string(branch) + " outside head with " +
                            std::to_string(branches()) + " branches");
}

template <typename T>
Tensor<T> Network<T>::forward_shared(const Tensor<T>& frame, Mode mode) {
  require_shape(frame.rank() == 4 && frame.dim(0) == 1, "frame must be 1 x C x H x W, got " + frame.shape_str());
  require_shape(frame.dim(1) == spec_.input_channels(), "frame has " + std::to_string(frame.dim(1)) +
                                                            " channels, network expects " +
                                                            std::to_string(spec_.input_channels()));
  require_shape(spec_.trunk_extent(frame.dim(2)) >= 1 && spec_.trunk_extent(frame.dim(3)) >= 1,
                "frame " + frame.shape_str() + " is smaller than the conv trunk's receptive field");
  ++conv_passes_;
  Tensor<T> x = trunk_.front()->forward(frame, mode);
  for (std::size_t i = 1; i < trunk_.size(); ++i) x = trunk_[i]->forward(x, mode);
  trunk_cached_ = mode == Mode::Train;
  featmap_shape_ = x.shape();
  return x;
}

template <typename T>
PooledFeature<T> Network<T>::pool(const Tensor<T>& featmap, std::span<const RoI> rois) const {
  require_shape(featmap.rank() == 4 && featmap.dim(1) == spec_.trunk_channels(),
                "feature map " + featmap.shape_str() + " does not match the trunk");
  return roi_forward(spec_.roi_method, featmap, rois, spec_.roi);
}

template <typename T>
Tensor<T> Network<T>::score_rois(const Tensor<T>& featmap, std::span<const RoI> rois, int branch, Mode mode) {
  check_branch(branch);
  if (rois.empty()) return {};
  PooledFeature<T> pooled = pool(featmap, rois);
  Tensor<T> logits = score_pooled(pooled.values, branch, mode);
  if (mode == Mode::Train) pooled_cache_ = std::move(pooled);
  return logits;
}

template <typename T>
Tensor<T> Network<T>::score_pooled(const Tensor<T>& features, int branch, Mode mode) {
  check_branch(branch);
  if (features.empty()) return {};
  require_shape(features.row_size() == static_cast<std::size_t>(spec_.pooled_size()),
                "pooled features " + features.shape_str() + " do not flatten to " +
                    std::to_string(spec_.pooled_size()));
  Tensor<T> x({features.dim(0), spec_.pooled_size()}, std::vector<T>(features.values().begin(), features.values().end()));
  for (auto& layer : fc_trunk_) x = layer->forward(x, mode);
  if (mode == Mode::Train) {
    active_branch_ = branch;
    pooled_cache_ = {};
  }
  return heads_[static_cast<std::size_t>(branch)]->forward(x, mode);
}

template <typename T>
Tensor<T> Network<T>::backward_fc(const Tensor<T>& grad_logits) {
  if (active_branch_ < 0) throw std::logic_error("backward_fc without a train-mode score");
  Tensor<T> g = heads_[static_cast<std::size_t>(active_branch_)]->backward(grad_logits);
  for (auto it = fc_trunk_.rbegin(); it != fc_trunk_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename T>
void Network<T>::backward_trunk(const Tensor<T>& grad_pooled) {
  if (!trunk_cached_ || pooled_cache_.traces.empty())
    throw std::logic_error("backward_trunk needs a train-mode forward_shared followed by score_rois");
  Tensor<T> g = grad_pooled;
  g.reshape(pooled_cache_.values.shape());
  g = roi_backward(g, pooled_cache_, featmap_shape_);
  for (std::size_t i = trunk_.size(); i-- > 1;) g = trunk_[i]->backward(g);
  trunk_.front()->backward_params_only(g);
}

template <typename T>
void Network<T>::swap_head(int new_k, double init_std, std::uint64_t seed) {
  if (new_k < 1) throw std::invalid_argument("head needs at least one branch, got " + std::to_string(new_k));
  if (!(init_std > 0)) throw std::invalid_argument("head init std must be > 0");
  std::mt19937_64 rng(seed);
  heads_.clear();
  const int in = spec_.head_input_size();
  for (int i = 0; i < new_k; ++i)
    heads_.push_back(make_layer<T>(LayerConfig::fc("head." + std::to_string(i), in, 2, init_std), rng));
  spec_.head_branches = new_k;
  spec_.head_init_std = init_std;
  active_branch_ = -1;
}

template <typename T>
void Network<T>::reinit_fc_trunk(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& layer : fc_trunk_) layer = make_layer<T>(layer->config(), rng);
  active_branch_ = -1;
}

template <typename T>
void Network<T>::reseed_dropout(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& layer : fc_trunk_) layer->reseed(rng());
}

template <typename T>
void Network<T>::set_trunk_learnable(bool learnable) {
  for (Param<T>* p : trunk_params()) p->learnable = learnable;
}

template <typename T>
std::vector<Param<T>*> Network<T>::trunk_params() {
  std::vector<Param<T>*> out;
  for (auto& l : trunk_)
    for (Param<T>* p : l->params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Param<T>*> Network<T>::fc_params() {
  std::vector<Param<T>*> out;
  for (auto& l : fc_trunk_)
    for (Param<T>* p : l->params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Param<T>*> Network<T>::branch_params(int branch) {
  check_branch(branch);
  return heads_[static_cast<std::size_t>(branch)]->params();
}

template <typename T>
std::vector<Param<T>*> Network<T>::all_params() {
  std::vector<Param<T>*> out = trunk_params();
  for (Param<T>* p : fc_params()) out.push_back(p);
  for (int b = 0; b < branches(); ++b)
    for (Param<T>* p : branch_params(b)) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Param<T>*> Network<T>::named_params() const {
  auto* self = const_cast<Network<T>*>(this);
  std::vector<const Param<T>*> out;
  for (Param<T>* p : self->all_params()) out.push_back(p);
  return out;
}

template class Network<float>;
template class Network<double>;

}  // namespace fdt
