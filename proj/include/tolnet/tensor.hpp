#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <vector>

#include "tolnet/common.hpp"

namespace tolnet {

// Dense row-major tensor of 64-bit floats. Copies share storage; every
// operation in the library returns a freshly allocated result, so a Tensor
// handed out by a public function is never mutated behind the caller's back.
// This makes Tensors safe to read from multiple threads.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0);

  static Tensor from(Shape shape, std::vector<double> values);

  // Rank-1 convenience, used heavily in tests.
  static Tensor vec(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }
  bool empty() const { return !data_; }

  const double* data() const { return data_->data(); }
  double* mut() { return data_->data(); }

  double operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }
  double& operator[](int64_t i) { return (*data_)[static_cast<size_t>(i)]; }

  double at(std::initializer_list<int64_t> idx) const;

  // Same storage, new shape (numel must match).
  Tensor reshaped(Shape shape) const;

  // Deep copy with unshared storage.
  Tensor clone() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const;

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
};

// Value-level tensor arithmetic (outside the autodiff graph). All of these
// check shapes and route through the active kernel set.
Tensor t_add(const Tensor& a, const Tensor& b);
Tensor t_sub(const Tensor& a, const Tensor& b);
Tensor t_mul(const Tensor& a, const Tensor& b);
Tensor t_max(const Tensor& a, const Tensor& b);
Tensor t_min(const Tensor& a, const Tensor& b);
Tensor t_abs(const Tensor& a);
Tensor t_relu(const Tensor& a);
Tensor t_add_scalar(const Tensor& a, double s);
Tensor t_mul_scalar(const Tensor& a, double s);
// sign with sign(0) = 0
Tensor t_sign(const Tensor& a);
Tensor t_clamp(const Tensor& a, double lo, double hi);
double t_sum(const Tensor& a);

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace tolnet
