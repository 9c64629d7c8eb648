#include "fdt/sgd.hpp"

namespace fdt {

template <typename T>
void sgd_step(std::span<Param<T>* const> params, const SgdConfig& cfg) {
  const T lr = static_cast<T>(cfg.lr), wd = static_cast<T>(cfg.weight_decay), mu = static_cast<T>(cfg.momentum);
  for (Param<T>* p : params) {
    if (p->learnable) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        T& v = p->velocity[i];
        v = mu * v + p->grad[i] + wd * p->value[i];
        p->value[i] -= lr * v;
      }
    }
    p->zero_grad();
  }
}

template <typename T>
void zero_grads(std::span<Param<T>* const> params) {
  for (Param<T>* p : params) p->zero_grad();
}

template void sgd_step<float>(std::span<Param<float>* const>, const SgdConfig&);
template void sgd_step<double>(std::span<Param<double>* const>, const SgdConfig&);
template void zero_grads<float>(std::span<Param<float>* const>);
template void zero_grads<double>(std::span<Param<double>* const>);

}  // namespace fdt
