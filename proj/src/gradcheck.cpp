#include "fdt/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "fdt/layers.hpp"
#include "fdt/loss.hpp"
#include "fdt/network.hpp"
#include "fdt/roi.hpp"

namespace fdt {

bool GradCheckReport::passed() const {
  return !components.empty() &&
         std::all_of(components.begin(), components.end(), [](const ComponentReport& c) { return c.passed; });
}

double gradient_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

double check_tensor_gradient(const std::function<double()>& f, Tensor<double>& x, const Tensor<double>& analytic,
                             double step, int probes, std::uint64_t seed, long long* probe_count) {
  require_shape(x.shape() == analytic.shape(), "gradient shape " + analytic.shape_str() + " vs " + x.shape_str());
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (static_cast<int>(idx.size()) > probes) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(probes));
  }
  double worst = 0.0;
  for (std::size_t i : idx) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    worst = std::max(worst, gradient_error(analytic[i], (up - down) / (2 * step)));
  }
  if (probe_count) *probe_count += static_cast<long long>(idx.size());
  return worst;
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

/// Values on a 0.01 lattice in random order plus sub-lattice jitter, so any
/// two elements differ by more than the finite-difference step.
Tensor<double> distinct_tensor(std::vector<int> shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  std::vector<int> perm(t.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> jitter(0.0, 0.002);
  const double mid = 0.5 * static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (perm[i] - mid) * 0.01 + jitter(rng);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Checker {
  ComponentReport report;
  const GradCheckConfig& cfg;
  Rng& rng;

  Checker(std::string name, const GradCheckConfig& c, Rng& r) : cfg(c), rng(r) { report.name = std::move(name); }

  void check(const std::function<double()>& f, Tensor<double>& x, const Tensor<double>& analytic) {
    report.worst_error =
        std::max(report.worst_error, check_tensor_gradient(f, x, analytic, cfg.step, cfg.probes, rng(), &report.probes));
  }
  ComponentReport finish() {
    report.passed = report.instances >= cfg.instances && report.worst_error < cfg.tolerance;
    return report;
  }
};

constexpr int kMaxRedraws = 1000;

ComponentReport check_conv(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("conv", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    const int n = uniform_int(rng, 1, 2), c = uniform_int(rng, 1, 3), k = uniform_int(rng, 1, 4);
    const int kernel = uniform_int(rng, 0, 1) ? 3 : 1, stride = uniform_int(rng, 1, 2), pad = uniform_int(rng, 0, 1);
    const int h = uniform_int(rng, kernel, 7), w = uniform_int(rng, kernel, 7);
    Tensor<double> x = random_tensor({n, c, h, w}, rng);
    Tensor<double> wt = random_tensor({k, c, kernel, kernel}, rng);
    Tensor<double> b = random_tensor({k}, rng);
    const Tensor<double> out = conv2d_forward(x, wt, b, stride, pad);
    const Tensor<double> g = random_tensor(out.shape(), rng);
    const ConvGrads<double> grads = conv2d_backward(x, wt, g, stride, pad);
    auto f = [&] { return dot(g, conv2d_forward(x, wt, b, stride, pad)); };
    t.check(f, x, grads.input);
    t.check(f, wt, grads.weights);
    t.check(f, b, grads.bias);
    ++t.report.instances;
  }
  return t.finish();
}

ComponentReport check_relu(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("relu", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    Tensor<double> x = random_tensor({uniform_int(rng, 1, 3), uniform_int(rng, 1, 4), 3, 3}, rng);
    // Keep every input clear of the kink at zero.
    for (auto& v : x.values())
      if (std::abs(v) < 1e-2) v = v < 0 ? v - 1e-2 : v + 1e-2;
    const Tensor<double> g = random_tensor(x.shape(), rng);
    const Tensor<double> grad = relu_backward(x, g);
    t.check([&] { return dot(g, relu_forward(x)); }, x, grad);
    ++t.report.instances;
  }
  return t.finish();
}

ComponentReport check_lrn(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("lrn", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    LrnParams p;
    // Odd instances exaggerate the normalization so the cross-channel terms dominate.
    if (i % 2 == 1) {
      p.depth = uniform_int(rng, 0, 1) ? 5 : 3;
      p.k = std::uniform_real_distribution<double>(1.0, 2.0)(rng);
      p.alpha = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    }
    Tensor<double> x = random_tensor({uniform_int(rng, 1, 2), uniform_int(rng, 2, 7), 3, 2}, rng, -2.0, 2.0);
    const Tensor<double> g = random_tensor(x.shape(), rng);
    const Tensor<double> grad = lrn_backward(x, g, p);
    t.check([&] { return dot(g, lrn_forward(x, p)); }, x, grad);
    ++t.report.instances;
  }
  return t.finish();
}

ComponentReport check_maxpool(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("maxpool", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    const int kernel = uniform_int(rng, 2, 3), stride = uniform_int(rng, 1, 2);
    Tensor<double> x = distinct_tensor(
        {uniform_int(rng, 1, 2), uniform_int(rng, 1, 3), uniform_int(rng, kernel, 7), uniform_int(rng, kernel, 7)}, rng);
    const MaxPoolResult<double> fwd = maxpool_forward(x, kernel, stride);
    const Tensor<double> g = random_tensor(fwd.output.shape(), rng);
    const Tensor<double> grad = maxpool_backward(g, fwd.argmax, x.shape());
    t.check([&] { return dot(g, maxpool_forward(x, kernel, stride).output); }, x, grad);
    ++t.report.instances;
  }
  return t.finish();
}

ComponentReport check_fc(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("fc", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    const int n = uniform_int(rng, 1, 4), d = uniform_int(rng, 2, 10), o = uniform_int(rng, 1, 5);
    Tensor<double> x = random_tensor({n, d}, rng);
    Tensor<double> w = random_tensor({o, d}, rng);
    Tensor<double> b = random_tensor({o}, rng);
    const Tensor<double> g = random_tensor({n, o}, rng);
    const ConvGrads<double> grads = linear_backward(x, w, g);
    auto f = [&] { return dot(g, linear_forward(x, w, b)); };
    t.check(f, x, grads.input);
    t.check(f, w, grads.weights);
    t.check(f, b, grads.bias);
    ++t.report.instances;
  }
  return t.finish();
}

ComponentReport check_softmax(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("softmax_ce", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    const int n = uniform_int(rng, 1, 6);
    Tensor<double> logits = random_tensor({n, 2}, rng, -3.0, 3.0);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = uniform_int(rng, 0, 1);
    const LossResult<double> r = softmax_cross_entropy(logits, labels);
    t.check([&] { return softmax_cross_entropy_loss(logits, labels); }, logits, r.grad);
    ++t.report.instances;
  }
  return t.finish();
}

std::vector<RoI> random_rois(int count, int batch, int h, int w, Rng& rng) {
  std::uniform_real_distribution<double> ux(-1.0, w), uy(-1.0, h), size(0.3, 4.0);
  std::vector<RoI> rois;
  for (int r = 0; r < count; ++r) {
    RoI roi;
    roi.x1 = ux(rng);
    roi.y1 = uy(rng);
    roi.x2 = roi.x1 + size(rng);
    roi.y2 = roi.y1 + size(rng);
    roi.batch_index = uniform_int(rng, 0, batch - 1);
    rois.push_back(roi);
  }
  return rois;
}

/// True when some bin's best sample beats a sample at a different point by
/// less than `gap`, so a finite-difference step could flip the winner.
bool has_near_tie(const Tensor<double>& fm, const PooledFeature<double>& pooled, double gap) {
  const int channels = fm.dim(1);
  const int bins = pooled.params.out_h * pooled.params.out_w;
  const int per_bin = pooled.params.samples_h * pooled.params.samples_w;
  for (const RoiTrace& tr : pooled.traces) {
    for (int c = 0; c < channels; ++c) {
      for (int b = 0; b < bins; ++b) {
        const auto* pts = tr.points.data() + static_cast<std::size_t>(b) * per_bin;
        int best = 0;
        std::vector<double> v(static_cast<std::size_t>(per_bin));
        for (int s = 0; s < per_bin; ++s) {
          v[static_cast<std::size_t>(s)] = bilinear_sample(fm, tr.batch_index, c, pts[s].x, pts[s].y);
          if (v[static_cast<std::size_t>(s)] > v[static_cast<std::size_t>(best)]) best = s;
        }
        for (int s = 0; s < per_bin; ++s) {
          if (s == best || (pts[s].x == pts[best].x && pts[s].y == pts[best].y)) continue;
          if (v[static_cast<std::size_t>(best)] - v[static_cast<std::size_t>(s)] < gap) return true;
        }
      }
    }
  }
  return false;
}

ComponentReport check_roi(RoiMethod method, const GradCheckConfig& cfg, Rng& rng) {
  Checker t(method == RoiMethod::Align ? "roialign" : "roipool", cfg, rng);
  while (t.report.instances < cfg.instances) {
    const int n = uniform_int(rng, 1, 2), c = uniform_int(rng, 1, 3);
    const int h = uniform_int(rng, 4, 8), w = uniform_int(rng, 4, 8);
    RoiParams p;
    p.out_h = uniform_int(rng, 1, 3);
    p.out_w = uniform_int(rng, 1, 3);
    p.samples_h = uniform_int(rng, 1, 3);
    p.samples_w = uniform_int(rng, 1, 3);
    Tensor<double> fm = method == RoiMethod::Align ? random_tensor({n, c, h, w}, rng) : distinct_tensor({n, c, h, w}, rng);
    const auto rois = random_rois(uniform_int(rng, 1, 4), n, h, w, rng);
    const PooledFeature<double> fwd = roi_forward(method, fm, std::span<const RoI>(rois), p);
    if (method == RoiMethod::Align && has_near_tie(fm, fwd, 1e-4)) {
      if (++t.report.redrawn > kMaxRedraws) break;
      continue;
    }
    const Tensor<double> g = random_tensor(fwd.values.shape(), rng);
    const Tensor<double> grad = roi_backward(g, fwd, fm.shape());
    t.check([&] { return dot(g, roi_forward(method, fm, std::span<const RoI>(rois), p).values); }, fm, grad);
    ++t.report.instances;
  }
  return t.finish();
}

NetworkSpec tiny_spec(RoiMethod method, std::uint64_t seed) {
  NetworkSpec s;
  s.trunk = {LayerConfig::conv("c1", 3, 4, 3, 2, 1), LayerConfig::relu("r1"), LayerConfig::conv("c2", 4, 4, 3, 1, 1)};
  s.roi_method = method;
  s.roi = {2, 2, 2, 2};
  s.fc_trunk = {LayerConfig::fc("f1", 16, 8, 0.3), LayerConfig::relu("r2"), LayerConfig::dropout("d1", 0.3)};
  s.head_branches = 2;
  s.head_init_std = 0.3;
  s.seed = seed;
  return s;
}

ComponentReport check_network(const GradCheckConfig& cfg, Rng& rng) {
  Checker t("network_e2e", cfg, rng);
  for (int i = 0; i < cfg.instances; ++i) {
    Network<double> net(tiny_spec(i % 2 == 0 ? RoiMethod::Align : RoiMethod::Pool, rng()));
    const Tensor<double> frame = random_tensor({1, 3, 10, 10}, rng, -2.0, 2.0);
    const auto rois = random_rois(3, 1, 5, 5, rng);
    std::vector<int> labels(rois.size());
    for (auto& l : labels) l = uniform_int(rng, 0, 1);
    const int branch = uniform_int(rng, 0, 1);
    const std::uint64_t dropout_seed = rng();

    auto loss = [&] {
      net.reseed_dropout(dropout_seed);
      const Tensor<double> fm = net.forward_shared(frame, Mode::Train);
      return softmax_cross_entropy_loss(net.score_rois(fm, rois, branch, Mode::Train), labels);
    };

    for (Param<double>* p : net.all_params()) p->zero_grad();
    net.reseed_dropout(dropout_seed);
    const Tensor<double> fm = net.forward_shared(frame, Mode::Train);
    const LossResult<double> r = softmax_cross_entropy(net.score_rois(fm, rois, branch, Mode::Train), labels);
    net.backward_trunk(net.backward_fc(r.grad));

    for (Param<double>* p : net.all_params()) {
      const Tensor<double> analytic = p->grad;
      t.check(loss, p->value, analytic);
    }
    ++t.report.instances;
  }
  return t.finish();
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  GradCheckReport report;
  report.components.push_back(check_conv(cfg, rng));
  report.components.push_back(check_relu(cfg, rng));
  report.components.push_back(check_lrn(cfg, rng));
  report.components.push_back(check_maxpool(cfg, rng));
  report.components.push_back(check_fc(cfg, rng));
  report.components.push_back(check_softmax(cfg, rng));
  report.components.push_back(check_roi(RoiMethod::Align, cfg, rng));
  report.components.push_back(check_roi(RoiMethod::Pool, cfg, rng));
  report.components.push_back(check_network(cfg, rng));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace fdt
