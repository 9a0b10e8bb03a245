#include "tolnet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "tolnet/kernels.hpp"

namespace tolnet {

std::string shape_str(const Shape& s) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out << ", ";
    out << s[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (int64_t d : shape_)
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape_));
  data_ = std::make_shared<std::vector<double>>(static_cast<size_t>(shape_numel(shape_)), fill);
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  Tensor t;
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<std::vector<double>>(std::move(values));
  return t;
}

Tensor Tensor::vec(std::initializer_list<double> values) {
  return from({static_cast<int64_t>(values.size())}, std::vector<double>(values));
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  if (static_cast<int64_t>(idx.size()) != rank())
    throw ShapeError("index rank mismatch for shape " + shape_str(shape_));
  int64_t flat = 0;
  size_t i = 0;
  for (int64_t v : idx) {
    flat = flat * shape_[i] + v;
    ++i;
  }
  return (*data_)[static_cast<size_t>(flat)];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel())
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  return t;
}

bool Tensor::all_finite() const {
  if (!data_) return true;
  for (double v : *data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

namespace {
Tensor alloc_like(const Tensor& a) { return Tensor(a.shape()); }
}  // namespace

Tensor t_add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = alloc_like(a);
  kern::active_kernels().add(a.data(), b.data(), out.mut(), a.numel());
  return out;
}
Tensor t_sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = alloc_like(a);
  kern::active_kernels().sub(a.data(), b.data(), out.mut(), a.numel());
  return out;
}
Tensor t_mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = alloc_like(a);
  kern::active_kernels().mul(a.data(), b.data(), out.mut(), a.numel());
  return out;
}
Tensor t_max(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max");
  Tensor out = alloc_like(a);
  kern::active_kernels().vmax(a.data(), b.data(), out.mut(), a.numel());
  return out;
}
Tensor t_min(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "min");
  Tensor out = alloc_like(a);
  kern::active_kernels().vmin(a.data(), b.data(), out.mut(), a.numel());
  return out;
}
Tensor t_abs(const Tensor& a) {
  Tensor out = alloc_like(a);
  kern::active_kernels().vabs(a.data(), out.mut(), a.numel());
  return out;
}
Tensor t_relu(const Tensor& a) {
  Tensor out = alloc_like(a);
  kern::active_kernels().relu(a.data(), out.mut(), a.numel());
  return out;
}
Tensor t_add_scalar(const Tensor& a, double s) {
  Tensor out = alloc_like(a);
  kern::active_kernels().add_scalar(a.data(), s, out.mut(), a.numel());
  return out;
}
Tensor t_mul_scalar(const Tensor& a, double s) {
  Tensor out = alloc_like(a);
  kern::active_kernels().mul_scalar(a.data(), s, out.mut(), a.numel());
  return out;
}
Tensor t_sign(const Tensor& a) {
  Tensor out = alloc_like(a);
  kern::active_kernels().sign(a.data(), out.mut(), a.numel());
  return out;
}
Tensor t_clamp(const Tensor& a, double lo, double hi) {
  Tensor out = alloc_like(a);
  kern::active_kernels().clamp(a.data(), lo, hi, out.mut(), a.numel());
  return out;
}
double t_sum(const Tensor& a) { return kern::active_kernels().sum(a.data(), a.numel()); }

}  // namespace tolnet
