#pragma once

#include <span>

#include "fdt/tensor.hpp"

namespace fdt {

struct SgdConfig {
  double lr = 1e-4;
  double weight_decay = 5e-4;
  double momentum = 0.9;
};

/// Classical momentum SGD with L2 decay folded into the velocity:
///   v <- momentum * v + grad + weight_decay * value;  value <- value - lr * v
/// Gradients of every listed parameter are zeroed afterwards. Non-learnable
/// parameters only have their gradients cleared.
template <typename T>
void sgd_step(std::span<Param<T>* const> params, const SgdConfig& cfg);

template <typename T>
void zero_grads(std::span<Param<T>* const> params);

}  // namespace fdt
