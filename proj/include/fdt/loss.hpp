#pragma once

#include <span>
#include <vector>

#include "fdt/tensor.hpp"

namespace fdt {

/// Class indices for the two-way classifier. Column 0 holds the target logit.
enum Label : int { kTarget = 0, kBackground = 1 };

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d logits
};

/// Mean negative log-likelihood over an n x 2 logit batch; grad = (softmax - onehot) / n.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

/// Same loss without the gradient.
template <typename T>
double softmax_cross_entropy_loss(const Tensor<T>& logits, std::span<const int> labels);

/// Target logit minus background logit. A margin of 0 is softmax probability 0.5.
inline double score_of(double target_logit, double background_logit) { return target_logit - background_logit; }

/// score_of for every row of an n x 2 logit tensor.
template <typename T>
std::vector<double> margins(const Tensor<T>& logits) {
  std::vector<double> out;
  if (logits.empty()) return out;
  out.reserve(static_cast<std::size_t>(logits.dim(0)));
  for (int i = 0; i < logits.dim(0); ++i) out.push_back(score_of(logits[2 * i], logits[2 * i + 1]));
  return out;
}

}  // namespace fdt
