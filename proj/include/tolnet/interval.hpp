#pragma once

#include "tolnet/graph.hpp"
#include "tolnet/network.hpp"
#include "tolnet/tensor.hpp"

namespace tolnet {

// Elementwise lower/upper bound pair over one tensor shape (boxed domain).
struct IntervalTensor {
  Tensor lower, upper;

  IntervalTensor(Tensor lo, Tensor hi);  // enforces shapes equal and lo <= hi
};

// Parameters of the provable-robustness criterion: output tolerances Δ,
// perturbation layer l̃ (1-based) and perturbation magnitude κ.
struct RobustSpec {
  Tensor delta;         // [d_L], every entry >= 0
  int64_t layer_index;  // l̃ in 1..L
  double kappa;         // >= 0

  void validate(const Network& net) const;
};

// [fv - κ, fv + κ] elementwise; κ must be >= 0.
IntervalTensor widen(const Tensor& fv, double kappa);

// Affine transformers over a box, sound and exact for a single layer.
// Both are realized in center/radius form: with c=(l+u)/2 and r=(u-l)/2 the
// image of the box is [c·W - r·|W| + b, c·W + r·|W| + b], which equals the
// usual W+·l + W-·u sign-split bound. A degenerate box (l == u) therefore
// collapses to the exact point result of the same matmul kernel.
IntervalTensor propagate_dense(const IntervalTensor& box, const Tensor& w, const Tensor& b);
IntervalTensor propagate_conv(const IntervalTensor& box, const Tensor& kernel, const Tensor& bias,
                              int64_t stride, Padding padding);

// Monotone maps: apply to both endpoints independently.
IntervalTensor propagate_relu(const IntervalTensor& box);
IntervalTensor propagate_maxpool(const IntervalTensor& box, int64_t win_h, int64_t win_w,
                                 int64_t stride);

// The output bound under (l̃, κ)-perturbation: evaluates the prefix
// f^(l̃-1)(in) in point arithmetic, widens it by κ, and pushes the box
// through layers l̃..L. Result shape [d_L].
IntervalTensor output_bounds(const Network& net, const Tensor& in, const RobustSpec& spec);

// Graph-level (differentiable) box. Gradients flow through both the point
// prefix and the interval suffix; the |W| sign pattern acts as a constant in
// the backward pass.
struct BoxVal {
  Value lower, upper;
};

BoxVal box_widen(Graph& g, Value fv, double kappa);

// Pushes a batched box through layers from_l..to_l (1-based, inclusive).
BoxVal build_box_forward(Graph& g, const Network& net, BoxVal box, int64_t from_l, int64_t to_l,
                         const ParamBinding* params);

// Full bound construction on a graph: point prefix, widen, box suffix.
// `input` is batched [B, ...]; result values are [B, d_L].
BoxVal build_output_bounds(Graph& g, const Network& net, Value input, const RobustSpec& spec,
                           const ParamBinding* params);

}  // namespace tolnet
