#include "fdt/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace fdt {

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

namespace {

std::size_t checked_count(const std::vector<int>& shape) {
  require_shape(!shape.empty(), "tensor shape must have at least one dimension");
  std::size_t n = 1;
  for (int d : shape) {
    require_shape(d >= 1, "tensor dimensions must be >= 1, got " + shape_to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

template <typename T>
Tensor<T>::Tensor(std::vector<int> shape, T fill) : shape_(std::move(shape)) {
  data_.assign(checked_count(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(std::vector<int> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t n = checked_count(shape_);
  require_shape(n == data_.size(), "shape " + shape_to_string(shape_) + " holds " + std::to_string(n) +
                                       " elements but data has " + std::to_string(data_.size()));
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
void Tensor<T>::reshape(std::vector<int> shape) {
  const std::size_t n = checked_count(shape);
  require_shape(n == data_.size(), "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  shape_ = std::move(shape);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace fdt
