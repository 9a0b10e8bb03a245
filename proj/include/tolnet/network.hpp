#pragma once

#include <string>
#include <vector>

#include "tolnet/graph.hpp"
#include "tolnet/tensor.hpp"

namespace tolnet {

enum class LayerKind { Dense, Conv2d, Relu, Flatten, MaxPool2d };

const char* layer_kind_name(LayerKind k);

// One layer g^(l). Dense weights are stored input-major [d_in, d_out] and the
// prediction is x*W + b; conv kernels are [kh, kw, in_c, out_c].
struct Layer {
  LayerKind kind = LayerKind::Relu;
  std::string name;
  Tensor weight;
  Tensor bias;
  int64_t stride = 1;
  Padding padding = Padding::Valid;
  int64_t win_h = 0, win_w = 0;  // maxpool window

  static Layer dense(std::string name, int64_t d_in, int64_t d_out);
  static Layer conv2d(std::string name, int64_t kh, int64_t kw, int64_t in_c, int64_t out_c,
                      int64_t stride, Padding padding = Padding::Valid);
  static Layer relu(std::string name);
  static Layer flatten(std::string name);
  static Layer maxpool2d(std::string name, int64_t win_h, int64_t win_w, int64_t stride);

  bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
};

// Ordered layer list g^(1)..g^(L). Layer indices in the public interface are
// 1-based to match the f^(l) composition convention; index 0 is the input.
struct Network {
  std::vector<Layer> layers;
  Shape input_shape;  // per-sample shape, e.g. [128, 320, 1]

  int64_t num_layers() const { return static_cast<int64_t>(layers.size()); }
  int64_t output_dim() const;

  // -1 when absent
  int64_t layer_index(const std::string& name) const;

  // unique names + consecutive shape composition; throws on violation
  void validate() const;
};

// Per-sample output shape of every prefix: result[l] = shape of f^(l),
// result[0] = input shape.
std::vector<Shape> layer_shapes(const Network& net);

// Graph-side parameter binding, one Value per parameter tensor, in
// (layer order, weight-then-bias) order.
struct ParamBinding {
  std::vector<Value> weight;  // invalid Value for parameterless layers
  std::vector<Value> bias;
};

ParamBinding bind_params(Graph& g, const Network& net, bool requires_grad);

// Builds layers from_l..to_l (1-based, inclusive) on the graph. `x` is the
// batched value of f^(from_l - 1), shape [B, ...]. Passing params = nullptr
// binds parameters as constants inside.
Value build_forward(Graph& g, const Network& net, Value x, int64_t from_l, int64_t to_l,
                    const ParamBinding* params);

// Point evaluation. Single-sample tensors in, single-sample tensors out.
Tensor forward(const Network& net, const Tensor& in);
Tensor forward_to(const Network& net, int64_t l, const Tensor& in);
Tensor forward_from(const Network& net, int64_t l_tilde, const Tensor& fv);

// Batched evaluation: in is [B, ...input_shape], result [B, d_L].
Tensor forward_batch(const Network& net, const Tensor& in);

// The repository's reference architecture:
//   conv2d 5x5xCx8 stride 2 - relu - conv2d 3x3x8x16 stride 2 - relu -
//   flatten - dense 100 - relu - dense 40 ("fc40") - relu - dense output_dim
// All weights zero until init_weights.
Network default_architecture(const Shape& input_shape, int64_t output_dim);

// Resolves a layer name to the 1-based perturbation index l̃: the position
// immediately after the named layer and its trailing activation, i.e. the
// perturbed feature vector is that activation's output. Throws ContractError
// listing available names when the name is unknown, or when no layers remain
// after it.
int64_t resolve_perturb_layer(const Network& net, const std::string& name);

}  // namespace tolnet
