#include "fdt/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdt {

namespace {

template <typename T>
void check_batch(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.empty() || labels.empty()) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  require_shape(logits.rank() == 2 && logits.dim(1) == 2,
                "softmax_cross_entropy expects n x 2 logits, got " + logits.shape_str());
  require_shape(static_cast<std::size_t>(logits.dim(0)) == labels.size(),
                "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(logits.dim(0)) + " rows");
  for (int l : labels)
    if (l != kTarget && l != kBackground) throw std::invalid_argument("softmax_cross_entropy: label must be 0 or 1");
}

}  // namespace

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  check_batch(logits, labels);
  const int n = logits.dim(0);
  LossResult<T> r{0.0, Tensor<T>(logits.shape())};
  for (int i = 0; i < n; ++i) {
    const double a = logits[2 * i], b = logits[2 * i + 1];
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    const double p0 = std::exp(a - lse), p1 = std::exp(b - lse);
    const int y = labels[static_cast<std::size_t>(i)];
    r.loss += lse - (y == kTarget ? a : b);
    r.grad[2 * i] = static_cast<T>((p0 - (y == kTarget ? 1.0 : 0.0)) / n);
    r.grad[2 * i + 1] = static_cast<T>((p1 - (y == kBackground ? 1.0 : 0.0)) / n);
  }
  r.loss /= n;
  return r;
}

template <typename T>
double softmax_cross_entropy_loss(const Tensor<T>& logits, std::span<const int> labels) {
  return softmax_cross_entropy(logits, labels).loss;
}

template LossResult<float> softmax_cross_entropy(const Tensor<float>&, std::span<const int>);
template LossResult<double> softmax_cross_entropy(const Tensor<double>&, std::span<const int>);
template double softmax_cross_entropy_loss(const Tensor<float>&, std::span<const int>);
template double softmax_cross_entropy_loss(const Tensor<double>&, std::span<const int>);

}  // namespace fdt
