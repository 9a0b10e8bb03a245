#include "tolnet/interval.hpp"

#include <string>
#include <utility>

namespace tolnet {

IntervalTensor::IntervalTensor(Tensor lo, Tensor hi) : lower(std::move(lo)), upper(std::move(hi)) {
  require_same_shape(lower, upper, "IntervalTensor");
  const double* l = lower.data();
  const double* u = upper.data();
  for (int64_t i = 0; i < lower.numel(); ++i)
    if (!(l[i] <= u[i]))
      throw ContractError("IntervalTensor: lower > upper at flat index " + std::to_string(i));
}

void RobustSpec::validate(const Network& net) const {
  if (kappa < 0) throw ContractError("RobustSpec: kappa must be >= 0, got " + std::to_string(kappa));
  if (layer_index < 1 || layer_index > net.num_layers())
    throw ContractError("RobustSpec: layer index " + std::to_string(layer_index) +
                        " out of range [1, " + std::to_string(net.num_layers()) + "]");
  if (delta.numel() != net.output_dim())
    throw ShapeError("RobustSpec: delta " + shape_str(delta.shape()) + " does not match output dim " +
                     std::to_string(net.output_dim()));
  for (int64_t j = 0; j < delta.numel(); ++j)
    if (!(delta[j] >= 0))
      throw ContractError("RobustSpec: delta[" + std::to_string(j) + "] must be >= 0");
}

IntervalTensor widen(const Tensor& fv, double kappa) {
  if (kappa < 0) throw ContractError("widen: kappa must be >= 0, got " + std::to_string(kappa));
  return IntervalTensor(t_add_scalar(fv, -kappa), t_add_scalar(fv, kappa));
}

BoxVal box_widen(Graph& g, Value fv, double kappa) {
  if (kappa < 0) throw ContractError("widen: kappa must be >= 0, got " + std::to_string(kappa));
  return BoxVal{g.add_scalar(fv, -kappa), g.add_scalar(fv, kappa)};
}

namespace {

struct CenterRadius {
  Value c, r;
};

CenterRadius to_center_radius(Graph& g, BoxVal box) {
  return {g.mul_scalar(g.add(box.lower, box.upper), 0.5),
          g.mul_scalar(g.sub(box.upper, box.lower), 0.5)};
}

BoxVal box_dense_on(Graph& g, BoxVal box, Value w, Value b) {
  CenterRadius cr = to_center_radius(g, box);
  Value wc = g.matmul(cr.c, w);
  Value rr = g.matmul(cr.r, g.vabs(w));
  return BoxVal{g.bias_add(g.sub(wc, rr), b), g.bias_add(g.add(wc, rr), b)};
}

BoxVal box_conv_on(Graph& g, BoxVal box, Value w, Value b, int64_t stride, Padding padding) {
  CenterRadius cr = to_center_radius(g, box);
  Value wc = g.conv2d(cr.c, w, stride, padding);
  Value rr = g.conv2d(cr.r, g.vabs(w), stride, padding);
  return BoxVal{g.bias_add(g.sub(wc, rr), b), g.bias_add(g.add(wc, rr), b)};
}

Tensor batch_of_one(const Tensor& t) {
  Shape s = t.shape();
  s.insert(s.begin(), 1);
  return t.reshaped(std::move(s));
}

Tensor squeeze_batch(const Tensor& t) {
  return t.reshaped(Shape(t.shape().begin() + 1, t.shape().end()));
}

}  // namespace

BoxVal build_box_forward(Graph& g, const Network& net, BoxVal box, int64_t from_l, int64_t to_l,
                         const ParamBinding* params) {
  const int64_t L = net.num_layers();
  if (from_l < 1 || to_l > L || from_l > to_l + 1)
    throw ContractError("box layer range [" + std::to_string(from_l) + ", " +
                        std::to_string(to_l) + "] out of bounds");
  for (int64_t li = from_l - 1; li < to_l; ++li) {
    const Layer& l = net.layers[static_cast<size_t>(li)];
    Value w, b;
    if (l.has_params()) {
      if (params) {
        w = params->weight[static_cast<size_t>(li)];
        b = params->bias[static_cast<size_t>(li)];
      } else {
        w = g.leaf(l.weight);
        b = g.leaf(l.bias);
      }
    }
    try {
      switch (l.kind) {
        case LayerKind::Dense:
          box = box_dense_on(g, box, w, b);
          break;
        case LayerKind::Conv2d:
          box = box_conv_on(g, box, w, b, l.stride, l.padding);
          break;
        case LayerKind::Relu:
          box = BoxVal{g.relu(box.lower), g.relu(box.upper)};
          break;
        case LayerKind::Flatten: {
          const Tensor& v = g.value(box.lower);
          Shape flat{v.dim(0), v.numel() / v.dim(0)};
          box = BoxVal{g.reshape(box.lower, flat), g.reshape(box.upper, flat)};
          break;
        }
        case LayerKind::MaxPool2d:
          box = BoxVal{g.maxpool2d(box.lower, l.win_h, l.win_w, l.stride),
                       g.maxpool2d(box.upper, l.win_h, l.win_w, l.stride)};
          break;
      }
    } catch (const ShapeError& e) {
      throw ShapeError("layer '" + l.name + "': " + e.what());
    }
  }
  return box;
}

BoxVal build_output_bounds(Graph& g, const Network& net, Value input, const RobustSpec& spec,
                           const ParamBinding* params) {
  spec.validate(net);
  Value fv = build_forward(g, net, input, 1, spec.layer_index - 1, params);
  BoxVal box = box_widen(g, fv, spec.kappa);
  return build_box_forward(g, net, box, spec.layer_index, net.num_layers(), params);
}

namespace {

// Value-level transformer helpers share the graph builders so there is a
// single implementation of each rule.
IntervalTensor run_single_layer(const IntervalTensor& box, const Layer& layer) {
  Network net;
  // input shape equals the (unbatched) box shape
  net.input_shape = box.lower.shape();
  net.layers.push_back(layer);
  Graph g;
  BoxVal in{g.leaf(batch_of_one(box.lower)), g.leaf(batch_of_one(box.upper))};
  BoxVal out = build_box_forward(g, net, in, 1, 1, nullptr);
  return IntervalTensor(squeeze_batch(g.value(out.lower)), squeeze_batch(g.value(out.upper)));
}

}  // namespace

IntervalTensor propagate_dense(const IntervalTensor& box, const Tensor& w, const Tensor& b) {
  if (box.lower.rank() != 1)
    throw ShapeError("propagate_dense: expected a rank-1 box, got " +
                     shape_str(box.lower.shape()));
  Layer l = Layer::dense("dense", w.dim(0), w.dim(1));
  l.weight = w;
  l.bias = b;
  return run_single_layer(box, l);
}

IntervalTensor propagate_conv(const IntervalTensor& box, const Tensor& kernel, const Tensor& bias,
                              int64_t stride, Padding padding) {
  Layer l = Layer::conv2d("conv", kernel.dim(0), kernel.dim(1), kernel.dim(2), kernel.dim(3),
                          stride, padding);
  l.weight = kernel;
  l.bias = bias;
  return run_single_layer(box, l);
}

IntervalTensor propagate_relu(const IntervalTensor& box) {
  return IntervalTensor(t_relu(box.lower), t_relu(box.upper));
}

IntervalTensor propagate_maxpool(const IntervalTensor& box, int64_t win_h, int64_t win_w,
                                 int64_t stride) {
  return run_single_layer(box, Layer::maxpool2d("maxpool", win_h, win_w, stride));
}

IntervalTensor output_bounds(const Network& net, const Tensor& in, const RobustSpec& spec) {
  spec.validate(net);
  if (in.shape() != net.input_shape)
    throw ShapeError("output_bounds: input " + shape_str(in.shape()) +
                     " does not match network input " + shape_str(net.input_shape));
  Graph g;
  Value x = g.leaf(batch_of_one(in));
  BoxVal out = build_output_bounds(g, net, x, spec, nullptr);
  return IntervalTensor(squeeze_batch(g.value(out.lower)), squeeze_batch(g.value(out.upper)));
}

}  // namespace tolnet
