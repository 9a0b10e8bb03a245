#pragma once

#include <cstdint>
#include <vector>

#include "tolnet/kernels.hpp"
#include "tolnet/tensor.hpp"

namespace tolnet {

enum class Padding { Valid, Same };

// Handle into a Graph's node list.
struct Value {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Records primitive operations in evaluation order;
// backward() visits the nodes once in reverse recording order and
// accumulates adjoints additively (fan-out sums). A Graph is single-threaded:
// record and backward on one thread, one Graph per concurrent unit of work.
//
// Subgradient conventions (all documented so gradient tests stay off kinks):
//   relu/clip_nonneg at 0 -> 0, abs at 0 -> 0,
//   max routes ties to the first operand, min likewise.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value leaf(Tensor v, bool requires_grad = false);

  // elementwise (operand shapes must match exactly)
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value vmax(Value a, Value b);
  Value vmin(Value a, Value b);
  Value vabs(Value a);
  Value relu(Value a);
  // returns x when x >= 0 and 0 otherwise; identical to relu and kept as a
  // named primitive because the loss rewriting is stated in terms of it
  Value clip_nonneg(Value a) { return relu(a); }
  Value add_scalar(Value a, double s);
  Value mul_scalar(Value a, double s);

  // a[m,k] * b[k,n] -> [m,n]
  Value matmul(Value a, Value b);

  // in [h,w,c] or [batch,h,w,c]; kernel [kh,kw,c,f].
  // valid: out = floor((in - k)/stride) + 1, requires in >= k
  // same:  out = ceil(in/stride), zero padding split top/left-heavy-end
  Value conv2d(Value in, Value kernel, int64_t stride, Padding padding);

  // valid pooling, out = floor((in - win)/stride) + 1
  Value maxpool2d(Value in, int64_t win_h, int64_t win_w, int64_t stride);

  // x[..., n] + b[n], broadcast over leading dimensions
  Value bias_add(Value x, Value b);

  Value reshape(Value a, Shape shape);

  // [m,n] -> [m]: per-row sums
  Value row_sum(Value a);
  Value reduce_sum(Value a);   // -> [1]
  Value reduce_mean(Value a);  // -> [1], sum / numel

  const Tensor& value(Value v) const;

  // Gradient accumulated by the last backward(); zero tensor when the node
  // was never reached.
  Tensor grad(Value v) const;

  // root must be scalar (numel == 1)
  void backward(Value root);

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Leaf, Add, Sub, Mul, Max, Min, Abs, Relu, AddScalar, MulScalar,
    Matmul, Conv2d, MaxPool2d, BiasAdd, Reshape, RowSum, ReduceSum, ReduceMean,
  };

  struct Node {
    Op op = Op::Leaf;
    int32_t a = -1, b = -1;
    Tensor val;
    Tensor grad;
    bool req = false;
    double scalar = 0.0;
    kern::ConvDims conv;
    kern::PoolDims pool;
    std::vector<int64_t> argmax;
  };

  Value push(Node n);
  Node& at(Value v);
  const Node& at(Value v) const;
  Tensor& grad_buf(int32_t id);
  void backward_step(int32_t id);

  std::vector<Node> nodes_;
};

}  // namespace tolnet
