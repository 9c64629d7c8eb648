#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdt {

/// Thrown whenever operand shapes do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_to_string(const std::vector<int>& shape);

/**
 * Dense row-major N-d array. Feature maps use NCHW order.
 *
 * A default-constructed tensor is the empty tensor (rank 0, no elements);
 * every constructed tensor has all dimensions >= 1.
 */
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape, T fill = T(0));
  Tensor(std::vector<int> shape, std::vector<T> data);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// NCHW element access; rank must be 4.
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  void fill(T v);
  /// Same element count, new shape.
  void reshape(std::vector<int> shape);
  std::string shape_str() const { return shape_to_string(shape_); }

  /// Element count of everything past the leading dimension.
  std::size_t row_size() const { return shape_.empty() ? 0 : data_.size() / static_cast<std::size_t>(shape_[0]); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return empty() ? Tensor<U>() : Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

/// Trainable tensor with its gradient and momentum buffer.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> velocity;
  bool learnable = true;

  Param() = default;
  Param(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), velocity(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

void require_shape(bool ok, const std::string& what);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace fdt
