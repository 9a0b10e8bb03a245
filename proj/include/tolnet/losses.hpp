#pragma once

#include <cstdint>
#include <vector>

#include "tolnet/graph.hpp"
#include "tolnet/interval.hpp"
#include "tolnet/network.hpp"
#include "tolnet/tensor.hpp"

namespace tolnet {

// Tolerance band [lb - delta, lb + delta] for one output dimension.
struct ToleranceBand {
  double lb = 0.0;
  double delta = 0.0;  // >= 0
};

// Distance of pred to the band: 0 inside, distance to the nearer boundary
// outside.
double tolerance_error(double pred, const ToleranceBand& band);

// The same function composed from clip/max primitives:
//   max(clip_nonneg((lb-Δ) - pred), clip_nonneg(pred - (lb+Δ)))
// Bit-identical to tolerance_error for every input; this is the form the
// training graphs differentiate.
double tolerance_error_clip(double pred, const ToleranceBand& band);

// Reference implementation of the bound-overflow loss: splits [lo, up] \ band
// into its (at most two) maximal intervals and sums the distance of each
// interval's midpoint to the band. Kept as the slow oracle the endpoint
// shortcut is tested against; band boundaries are treated as half-open so a
// degenerate band removes only a measure-zero set.
double overflow_oracle(double lo_bound, double up_bound, const ToleranceBand& band);

// Endpoint form of the same quantity: (e(lo) + e(up)) / 2. Equal to
// overflow_oracle for every lo <= up; this is the differentiable fast path.
double symbolic_error(double lo_bound, double up_bound, const ToleranceBand& band);

// Batch loss report. value is sum(per_sample)/n; per_sample entries are the
// per-data-point squared-error sums E(in, lb).
struct LossReport {
  double value = 0.0;
  std::vector<double> per_sample;
  int64_t n = 0;
};

enum class LossKind { Mse, Interval, Symbolic };

const char* loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& s);

// Differentiable batch loss on a graph.
//   input   batched value [B, ...input_shape]
//   labels  [B, d_L]
//   delta   [d_L] tolerances (zeros reproduce plain MSE)
//   spec    nullptr for the pointwise interval loss; non-null for the
//           symbolic loss. kappa == 0 uses the point prediction as both
//           endpoints, which keeps the computation graph (values and
//           gradients) bit-identical to the interval loss.
struct LossNodes {
  Value loss;        // scalar, mean over samples
  Value per_sample;  // [B]
  Value pred;        // [B, d_L] point prediction (also built on the bound path)
};

LossNodes build_loss(Graph& g, const Network& net, const ParamBinding* params, Value input,
                     const Tensor& labels, const Tensor& delta, const RobustSpec* spec);

// Pointwise batch losses (forward only). inputs is [N, ...input_shape],
// labels [N, d_L]. Computation is chunked internally; per-sample terms are
// reduced in fixed sample order so results are reproducible bit for bit.
LossReport interval_tolerance_loss(const Network& net, const Tensor& inputs, const Tensor& labels,
                                   const Tensor& delta);
LossReport symbolic_tolerance_loss(const Network& net, const Tensor& inputs, const Tensor& labels,
                                   const RobustSpec& spec);

}  // namespace tolnet
