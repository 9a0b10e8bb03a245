#include "tolnet/graph.hpp"

#include <string>
#include <utility>

namespace tolnet {

namespace {
const kern::Kernels& K() { return kern::active_kernels(); }
}  // namespace

Value Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{static_cast<int32_t>(nodes_.size() - 1)};
}

Graph::Node& Graph::at(Value v) { return nodes_[static_cast<size_t>(v.id)]; }
const Graph::Node& Graph::at(Value v) const { return nodes_[static_cast<size_t>(v.id)]; }

const Tensor& Graph::value(Value v) const { return at(v).val; }

Tensor Graph::grad(Value v) const {
  const Node& n = at(v);
  if (n.grad.empty()) return Tensor(n.val.shape());
  return n.grad;
}

Value Graph::leaf(Tensor v, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.val = std::move(v);
  n.req = requires_grad;
  return push(std::move(n));
}

Value Graph::add(Value a, Value b) {
  require_same_shape(at(a).val, at(b).val, "add");
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.req = at(a).req || at(b).req;
  n.val = Tensor(at(a).val.shape());
  K().add(at(a).val.data(), at(b).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::sub(Value a, Value b) {
  require_same_shape(at(a).val, at(b).val, "sub");
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.req = at(a).req || at(b).req;
  n.val = Tensor(at(a).val.shape());
  K().sub(at(a).val.data(), at(b).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::mul(Value a, Value b) {
  require_same_shape(at(a).val, at(b).val, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.req = at(a).req || at(b).req;
  n.val = Tensor(at(a).val.shape());
  K().mul(at(a).val.data(), at(b).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::vmax(Value a, Value b) {
  require_same_shape(at(a).val, at(b).val, "max");
  Node n;
  n.op = Op::Max;
  n.a = a.id;
  n.b = b.id;
  n.req = at(a).req || at(b).req;
  n.val = Tensor(at(a).val.shape());
  K().vmax(at(a).val.data(), at(b).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::vmin(Value a, Value b) {
  require_same_shape(at(a).val, at(b).val, "min");
  Node n;
  n.op = Op::Min;
  n.a = a.id;
  n.b = b.id;
  n.req = at(a).req || at(b).req;
  n.val = Tensor(at(a).val.shape());
  K().vmin(at(a).val.data(), at(b).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::vabs(Value a) {
  Node n;
  n.op = Op::Abs;
  n.a = a.id;
  n.req = at(a).req;
  n.val = Tensor(at(a).val.shape());
  K().vabs(at(a).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::relu(Value a) {
  Node n;
  n.op = Op::Relu;
  n.a = a.id;
  n.req = at(a).req;
  n.val = Tensor(at(a).val.shape());
  K().relu(at(a).val.data(), n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::add_scalar(Value a, double s) {
  Node n;
  n.op = Op::AddScalar;
  n.a = a.id;
  n.req = at(a).req;
  n.scalar = s;
  n.val = Tensor(at(a).val.shape());
  K().add_scalar(at(a).val.data(), s, n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::mul_scalar(Value a, double s) {
  Node n;
  n.op = Op::MulScalar;
  n.a = a.id;
  n.req = at(a).req;
  n.scalar = s;
  n.val = Tensor(at(a).val.shape());
  K().mul_scalar(at(a).val.data(), s, n.val.mut(), n.val.numel());
  return push(std::move(n));
}

Value Graph::matmul(Value a, Value b) {
  const Tensor& av = at(a).val;
  const Tensor& bv = at(b).val;
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(av.shape()) + " vs " +
                     shape_str(bv.shape()));
  Node n;
  n.op = Op::Matmul;
  n.a = a.id;
  n.b = b.id;
  n.req = at(a).req || at(b).req;
  n.val = Tensor({av.dim(0), bv.dim(1)});
  K().gemm_acc(av.data(), bv.data(), n.val.mut(), av.dim(0), av.dim(1), bv.dim(1));
  return push(std::move(n));
}

Value Graph::conv2d(Value in, Value kernel, int64_t stride, Padding padding) {
  const Tensor& iv = at(in).val;
  const Tensor& kv = at(kernel).val;
  if ((iv.rank() != 3 && iv.rank() != 4) || kv.rank() != 4)
    throw ShapeError("conv2d: input must be [h,w,c] or [b,h,w,c] and kernel [kh,kw,c,f], got " +
                     shape_str(iv.shape()) + " and " + shape_str(kv.shape()));
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
  const bool batched = iv.rank() == 4;
  kern::ConvDims d;
  d.batch = batched ? iv.dim(0) : 1;
  d.in_h = iv.dim(batched ? 1 : 0);
  d.in_w = iv.dim(batched ? 2 : 1);
  d.in_c = iv.dim(batched ? 3 : 2);
  d.k_h = kv.dim(0);
  d.k_w = kv.dim(1);
  d.out_c = kv.dim(3);
  d.stride = stride;
  if (kv.dim(2) != d.in_c)
    throw ShapeError("conv2d: kernel channels " + shape_str(kv.shape()) +
                     " do not match input " + shape_str(iv.shape()));
  if (padding == Padding::Valid) {
    if (d.k_h > d.in_h || d.k_w > d.in_w)
      throw ShapeError("conv2d: kernel " + shape_str(kv.shape()) +
                       " larger than input " + shape_str(iv.shape()));
    d.out_h = (d.in_h - d.k_h) / stride + 1;
    d.out_w = (d.in_w - d.k_w) / stride + 1;
  } else {
    d.out_h = (d.in_h + stride - 1) / stride;
    d.out_w = (d.in_w + stride - 1) / stride;
    int64_t pad_h = std::max<int64_t>(0, (d.out_h - 1) * stride + d.k_h - d.in_h);
    int64_t pad_w = std::max<int64_t>(0, (d.out_w - 1) * stride + d.k_w - d.in_w);
    d.pad_top = pad_h / 2;
    d.pad_left = pad_w / 2;
  }
  Node n;
  n.op = Op::Conv2d;
  n.a = in.id;
  n.b = kernel.id;
  n.req = at(in).req || at(kernel).req;
  n.conv = d;
  n.val = batched ? Tensor({d.batch, d.out_h, d.out_w, d.out_c})
                  : Tensor({d.out_h, d.out_w, d.out_c});
  K().conv2d(iv.data(), kv.data(), n.val.mut(), d);
  return push(std::move(n));
}

Value Graph::maxpool2d(Value in, int64_t win_h, int64_t win_w, int64_t stride) {
  const Tensor& iv = at(in).val;
  if (iv.rank() != 3 && iv.rank() != 4)
    throw ShapeError("maxpool2d: input must be [h,w,c] or [b,h,w,c], got " +
                     shape_str(iv.shape()));
  if (stride < 1 || win_h < 1 || win_w < 1)
    throw ContractError("maxpool2d: window and stride must be >= 1");
  const bool batched = iv.rank() == 4;
  kern::PoolDims d;
  d.batch = batched ? iv.dim(0) : 1;
  d.in_h = iv.dim(batched ? 1 : 0);
  d.in_w = iv.dim(batched ? 2 : 1);
  d.c = iv.dim(batched ? 3 : 2);
  d.win_h = win_h;
  d.win_w = win_w;
  d.stride = stride;
  if (win_h > d.in_h || win_w > d.in_w)
    throw ShapeError("maxpool2d: window larger than input " + shape_str(iv.shape()));
  d.out_h = (d.in_h - win_h) / stride + 1;
  d.out_w = (d.in_w - win_w) / stride + 1;
  Node n;
  n.op = Op::MaxPool2d;
  n.a = in.id;
  n.req = at(in).req;
  n.pool = d;
  n.val = batched ? Tensor({d.batch, d.out_h, d.out_w, d.c})
                  : Tensor({d.out_h, d.out_w, d.c});
  n.argmax.resize(static_cast<size_t>(n.val.numel()));
  K().maxpool(iv.data(), n.val.mut(), n.argmax.data(), d);
  return push(std::move(n));
}

Value Graph::bias_add(Value x, Value b) {
  const Tensor& xv = at(x).val;
  const Tensor& bv = at(b).val;
  if (bv.rank() != 1 || xv.rank() < 1 || xv.dim(xv.rank() - 1) != bv.dim(0))
    throw ShapeError("bias_add: bias " + shape_str(bv.shape()) +
                     " does not match last dimension of " + shape_str(xv.shape()));
  Node n;
  n.op = Op::BiasAdd;
  n.a = x.id;
  n.b = b.id;
  n.req = at(x).req || at(b).req;
  n.val = Tensor(xv.shape());
  K().bias_add(xv.data(), bv.data(), n.val.mut(), xv.numel() / bv.dim(0), bv.dim(0));
  return push(std::move(n));
}

Value Graph::reshape(Value a, Shape shape) {
  Node n;
  n.op = Op::Reshape;
  n.a = a.id;
  n.req = at(a).req;
  n.val = at(a).val.reshaped(std::move(shape));
  return push(std::move(n));
}

Value Graph::row_sum(Value a) {
  const Tensor& av = at(a).val;
  if (av.rank() != 2) throw ShapeError("row_sum: expected rank-2, got " + shape_str(av.shape()));
  Node n;
  n.op = Op::RowSum;
  n.a = a.id;
  n.req = at(a).req;
  n.val = Tensor({av.dim(0)});
  const int64_t cols = av.dim(1);
  for (int64_t i = 0; i < av.dim(0); ++i)
    n.val[i] = K().sum(av.data() + i * cols, cols);
  return push(std::move(n));
}

Value Graph::reduce_sum(Value a) {
  Node n;
  n.op = Op::ReduceSum;
  n.a = a.id;
  n.req = at(a).req;
  n.val = Tensor({1});
  n.val[0] = K().sum(at(a).val.data(), at(a).val.numel());
  return push(std::move(n));
}

Value Graph::reduce_mean(Value a) {
  Node n;
  n.op = Op::ReduceMean;
  n.a = a.id;
  n.req = at(a).req;
  n.val = Tensor({1});
  n.val[0] = K().sum(at(a).val.data(), at(a).val.numel()) /
             static_cast<double>(at(a).val.numel());
  return push(std::move(n));
}

Tensor& Graph::grad_buf(int32_t id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor(n.val.shape());
  return n.grad;
}

void Graph::backward(Value root) {
  Node& r = at(root);
  if (r.val.numel() != 1)
    throw ContractError("backward: root must be scalar, got shape " + shape_str(r.val.shape()));
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buf(root.id)[0] = 1.0;
  for (int32_t i = root.id; i >= 0; --i) backward_step(i);
}

void Graph::backward_step(int32_t id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.empty() || n.op == Op::Leaf) return;
  const double* dy = n.grad.data();
  const int64_t ny = n.grad.numel();
  Node& pa = nodes_[static_cast<size_t>(n.a)];
  const bool need_a = pa.req;
  Node* pb = n.b >= 0 ? &nodes_[static_cast<size_t>(n.b)] : nullptr;
  const bool need_b = pb && pb->req;
  if (!need_a && !need_b) return;

  switch (n.op) {
    case Op::Add:
      if (need_a) K().acc(grad_buf(n.a).mut(), dy, ny);
      if (need_b) K().acc(grad_buf(n.b).mut(), dy, ny);
      break;
    case Op::Sub:
      if (need_a) K().acc(grad_buf(n.a).mut(), dy, ny);
      if (need_b) K().acc_scaled(grad_buf(n.b).mut(), dy, -1.0, ny);
      break;
    case Op::Mul:
      if (need_a) K().acc_mul(grad_buf(n.a).mut(), dy, pb->val.data(), ny);
      if (need_b) K().acc_mul(grad_buf(n.b).mut(), dy, pa.val.data(), ny);
      break;
    case Op::Max:
      // ties route the full adjoint to the first operand
      if (need_a) K().acc_cmp_mask(grad_buf(n.a).mut(), dy, pa.val.data(), pb->val.data(),
                                   kern::Cmp::GE, ny);
      if (need_b) K().acc_cmp_mask(grad_buf(n.b).mut(), dy, pb->val.data(), pa.val.data(),
                                   kern::Cmp::GT, ny);
      break;
    case Op::Min:
      if (need_a) K().acc_cmp_mask(grad_buf(n.a).mut(), dy, pa.val.data(), pb->val.data(),
                                   kern::Cmp::LE, ny);
      if (need_b) K().acc_cmp_mask(grad_buf(n.b).mut(), dy, pb->val.data(), pa.val.data(),
                                   kern::Cmp::LT, ny);
      break;
    case Op::Abs:
      if (need_a) K().acc_sign_mul(grad_buf(n.a).mut(), dy, pa.val.data(), ny);
      break;
    case Op::Relu:
      if (need_a) K().acc_relu_mask(grad_buf(n.a).mut(), dy, pa.val.data(), ny);
      break;
    case Op::AddScalar:
      if (need_a) K().acc(grad_buf(n.a).mut(), dy, ny);
      break;
    case Op::MulScalar:
      if (need_a) K().acc_scaled(grad_buf(n.a).mut(), dy, n.scalar, ny);
      break;
    case Op::Matmul: {
      const int64_t m = pa.val.dim(0), k = pa.val.dim(1), cols = pb->val.dim(1);
      if (need_a) K().gemm_acc_bt(dy, pb->val.data(), grad_buf(n.a).mut(), m, k, cols);
      if (need_b) K().gemm_acc_at(pa.val.data(), dy, grad_buf(n.b).mut(), m, k, cols);
      break;
    }
    case Op::Conv2d:
      if (need_a) K().conv2d_acc_din(dy, pb->val.data(), grad_buf(n.a).mut(), n.conv);
      if (need_b) K().conv2d_acc_dk(pa.val.data(), dy, grad_buf(n.b).mut(), n.conv);
      break;
    case Op::MaxPool2d:
      if (need_a) K().maxpool_acc_din(dy, n.argmax.data(), grad_buf(n.a).mut(), ny);
      break;
    case Op::BiasAdd: {
      const int64_t cols = pb->val.dim(0);
      if (need_a) K().acc(grad_buf(n.a).mut(), dy, ny);
      if (need_b) K().acc_colsum(grad_buf(n.b).mut(), dy, ny / cols, cols);
      break;
    }
    case Op::Reshape:
      if (need_a) K().acc(grad_buf(n.a).mut(), dy, ny);
      break;
    case Op::RowSum: {
      if (need_a) {
        Tensor& da = grad_buf(n.a);
        const int64_t cols = pa.val.dim(1);
        for (int64_t i = 0; i < pa.val.dim(0); ++i)
          K().add_scalar(da.data() + i * cols, dy[i], da.mut() + i * cols, cols);
      }
      break;
    }
    case Op::ReduceSum:
      if (need_a) K().add_scalar(grad_buf(n.a).data(), dy[0], grad_buf(n.a).mut(),
                                 pa.val.numel());
      break;
    case Op::ReduceMean:
      if (need_a) {
        const double g = dy[0] / static_cast<double>(pa.val.numel());
        K().add_scalar(grad_buf(n.a).data(), g, grad_buf(n.a).mut(), pa.val.numel());
      }
      break;
    case Op::Leaf:
      break;
  }
}

}  // namespace tolnet
