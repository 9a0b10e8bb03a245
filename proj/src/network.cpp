#include "tolnet/network.hpp"

#include <set>
#include <utility>

namespace tolnet {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::MaxPool2d: return "maxpool2d";
  }
  return "?";
}

Layer Layer::dense(std::string name, int64_t d_in, int64_t d_out) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.name = std::move(name);
  l.weight = Tensor({d_in, d_out});
  l.bias = Tensor({d_out});
  return l;
}

Layer Layer::conv2d(std::string name, int64_t kh, int64_t kw, int64_t in_c, int64_t out_c,
                    int64_t stride, Padding padding) {
  Layer l;
  l.kind = LayerKind::Conv2d;
  l.name = std::move(name);
  l.weight = Tensor({kh, kw, in_c, out_c});
  l.bias = Tensor({out_c});
  l.stride = stride;
  l.padding = padding;
  return l;
}

Layer Layer::relu(std::string name) {
  Layer l;
  l.kind = LayerKind::Relu;
  l.name = std::move(name);
  return l;
}

Layer Layer::flatten(std::string name) {
  Layer l;
  l.kind = LayerKind::Flatten;
  l.name = std::move(name);
  return l;
}

Layer Layer::maxpool2d(std::string name, int64_t win_h, int64_t win_w, int64_t stride) {
  Layer l;
  l.kind = LayerKind::MaxPool2d;
  l.name = std::move(name);
  l.win_h = win_h;
  l.win_w = win_w;
  l.stride = stride;
  return l;
}

namespace {

Shape layer_output_shape(const Layer& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::Dense: {
      if (in.size() != 1 || in[0] != l.weight.dim(0))
        throw ShapeError("layer '" + l.name + "': dense expects input [" +
                         std::to_string(l.weight.dim(0)) + "], got " + shape_str(in));
      return {l.weight.dim(1)};
    }
    case LayerKind::Conv2d: {
      if (in.size() != 3 || in[2] != l.weight.dim(2))
        throw ShapeError("layer '" + l.name + "': conv2d expects input [h,w," +
                         std::to_string(l.weight.dim(2)) + "], got " + shape_str(in));
      int64_t kh = l.weight.dim(0), kw = l.weight.dim(1);
      if (l.padding == Padding::Valid) {
        if (kh > in[0] || kw > in[1])
          throw ShapeError("layer '" + l.name + "': kernel " + shape_str(l.weight.shape()) +
                           " larger than input " + shape_str(in));
        return {(in[0] - kh) / l.stride + 1, (in[1] - kw) / l.stride + 1, l.weight.dim(3)};
      }
      return {(in[0] + l.stride - 1) / l.stride, (in[1] + l.stride - 1) / l.stride,
              l.weight.dim(3)};
    }
    case LayerKind::Relu:
      return in;
    case LayerKind::Flatten:
      return {shape_numel(in)};
    case LayerKind::MaxPool2d: {
      if (in.size() != 3)
        throw ShapeError("layer '" + l.name + "': maxpool2d expects [h,w,c], got " +
                         shape_str(in));
      if (l.win_h > in[0] || l.win_w > in[1])
        throw ShapeError("layer '" + l.name + "': pool window larger than input " +
                         shape_str(in));
      return {(in[0] - l.win_h) / l.stride + 1, (in[1] - l.win_w) / l.stride + 1, in[2]};
    }
  }
  throw ContractError("unreachable layer kind");
}

}  // namespace

std::vector<Shape> layer_shapes(const Network& net) {
  std::vector<Shape> shapes;
  shapes.reserve(net.layers.size() + 1);
  shapes.push_back(net.input_shape);
  Shape cur = net.input_shape;
  for (const Layer& l : net.layers) {
    cur = layer_output_shape(l, cur);
    shapes.push_back(cur);
  }
  return shapes;
}

int64_t Network::output_dim() const {
  Shape out = layer_shapes(*this).back();
  return shape_numel(out);
}

int64_t Network::layer_index(const std::string& name) const {
  for (size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == name) return static_cast<int64_t>(i);
  return -1;
}

void Network::validate() const {
  if (layers.empty()) throw ContractError("network has no layers");
  std::set<std::string> names;
  for (const Layer& l : layers)
    if (!names.insert(l.name).second)
      throw ContractError("duplicate layer name '" + l.name + "'");
  layer_shapes(*this);  // throws on any composition break
}

ParamBinding bind_params(Graph& g, const Network& net, bool requires_grad) {
  ParamBinding p;
  p.weight.resize(net.layers.size());
  p.bias.resize(net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    if (!net.layers[i].has_params()) continue;
    p.weight[i] = g.leaf(net.layers[i].weight, requires_grad);
    p.bias[i] = g.leaf(net.layers[i].bias, requires_grad);
  }
  return p;
}

Value build_forward(Graph& g, const Network& net, Value x, int64_t from_l, int64_t to_l,
                    const ParamBinding* params) {
  const int64_t L = net.num_layers();
  if (from_l < 1 || to_l > L || from_l > to_l + 1)
    throw ContractError("layer range [" + std::to_string(from_l) + ", " + std::to_string(to_l) +
                        "] out of bounds for a " + std::to_string(L) + "-layer network");
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
          x = g.bias_add(g.matmul(x, w), b);
          break;
        case LayerKind::Conv2d:
          x = g.bias_add(g.conv2d(x, w, l.stride, l.padding), b);
          break;
        case LayerKind::Relu:
          x = g.relu(x);
          break;
        case LayerKind::Flatten: {
          const Tensor& v = g.value(x);
          x = g.reshape(x, {v.dim(0), v.numel() / v.dim(0)});
          break;
        }
        case LayerKind::MaxPool2d:
          x = g.maxpool2d(x, l.win_h, l.win_w, l.stride);
          break;
      }
    } catch (const ShapeError& e) {
      throw ShapeError("layer '" + l.name + "': " + e.what());
    }
  }
  return x;
}

namespace {

Tensor batch_of_one(const Tensor& t) {
  Shape s = t.shape();
  s.insert(s.begin(), 1);
  return t.reshaped(std::move(s));
}

Tensor squeeze_batch(const Tensor& t) {
  Shape s(t.shape().begin() + 1, t.shape().end());
  return t.reshaped(std::move(s));
}

}  // namespace

Tensor forward_batch(const Network& net, const Tensor& in) {
  Graph g;
  Value x = g.leaf(in);
  return g.value(build_forward(g, net, x, 1, net.num_layers(), nullptr));
}

Tensor forward(const Network& net, const Tensor& in) {
  if (in.shape() != net.input_shape)
    throw ShapeError("forward: input " + shape_str(in.shape()) + " does not match network input " +
                     shape_str(net.input_shape));
  return squeeze_batch(forward_batch(net, batch_of_one(in)));
}

Tensor forward_to(const Network& net, int64_t l, const Tensor& in) {
  if (l < 0 || l > net.num_layers())
    throw ContractError("forward_to: layer index " + std::to_string(l) + " out of range [0, " +
                        std::to_string(net.num_layers()) + "]");
  if (in.shape() != net.input_shape)
    throw ShapeError("forward_to: input " + shape_str(in.shape()) +
                     " does not match network input " + shape_str(net.input_shape));
  if (l == 0) return in;
  Graph g;
  Value x = g.leaf(batch_of_one(in));
  return squeeze_batch(g.value(build_forward(g, net, x, 1, l, nullptr)));
}

Tensor forward_from(const Network& net, int64_t l_tilde, const Tensor& fv) {
  if (l_tilde < 1 || l_tilde > net.num_layers())
    throw ContractError("forward_from: layer index " + std::to_string(l_tilde) +
                        " out of range [1, " + std::to_string(net.num_layers()) + "]");
  const Shape expected = layer_shapes(net)[static_cast<size_t>(l_tilde - 1)];
  if (fv.shape() != expected)
    throw ShapeError("forward_from: feature vector " + shape_str(fv.shape()) +
                     " does not match layer " + std::to_string(l_tilde - 1) + " output " +
                     shape_str(expected));
  Graph g;
  Value x = g.leaf(batch_of_one(fv));
  return squeeze_batch(g.value(build_forward(g, net, x, l_tilde, net.num_layers(), nullptr)));
}

Network default_architecture(const Shape& input_shape, int64_t output_dim) {
  if (input_shape.size() != 3)
    throw ContractError("default_architecture expects an [h,w,c] input shape, got " +
                        shape_str(input_shape));
  Network net;
  net.input_shape = input_shape;
  net.layers.push_back(Layer::conv2d("conv1", 5, 5, input_shape[2], 8, 2));
  net.layers.push_back(Layer::relu("conv1_relu"));
  net.layers.push_back(Layer::conv2d("conv2", 3, 3, 8, 16, 2));
  net.layers.push_back(Layer::relu("conv2_relu"));
  net.layers.push_back(Layer::flatten("flatten"));
  // flatten width depends on the input size; infer it
  Shape flat = layer_shapes(net).back();
  net.layers.push_back(Layer::dense("fc100", flat[0], 100));
  net.layers.push_back(Layer::relu("fc100_relu"));
  net.layers.push_back(Layer::dense("fc40", 100, 40));
  net.layers.push_back(Layer::relu("fc40_relu"));
  net.layers.push_back(Layer::dense("out", 40, output_dim));
  net.validate();
  return net;
}

int64_t resolve_perturb_layer(const Network& net, const std::string& name) {
  int64_t idx = net.layer_index(name);
  if (idx < 0) {
    std::string names;
    for (const Layer& l : net.layers) {
      if (!names.empty()) names += ", ";
      names += l.name;
    }
    throw ContractError("layer '" + name + "' not found; available layers: " + names);
  }
  int64_t j = idx;
  while (j + 1 < net.num_layers() &&
         net.layers[static_cast<size_t>(j + 1)].kind == LayerKind::Relu)
    ++j;
  if (j + 1 >= net.num_layers())
    throw ContractError("layer '" + name + "' has no successor layers to perturb into");
  return j + 2;  // 1-based index of the first layer after the activation run
}

}  // namespace tolnet
