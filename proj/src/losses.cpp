#include "tolnet/losses.hpp"

#include <cmath>
#include <string>

#include "tolnet/kernels.hpp"

namespace tolnet {

double tolerance_error(double pred, const ToleranceBand& band) {
  const double lo = band.lb - band.delta;
  const double hi = band.lb + band.delta;
  if (pred >= lo && pred <= hi) return 0.0;
  const double a = std::fabs(pred - lo);
  const double b = std::fabs(pred - hi);
  return a < b ? a : b;
}

double tolerance_error_clip(double pred, const ToleranceBand& band) {
  const double lo = band.lb - band.delta;
  const double hi = band.lb + band.delta;
  double a = lo - pred;
  a = a > 0.0 ? a : 0.0;
  double b = pred - hi;
  b = b > 0.0 ? b : 0.0;
  return a > b ? a : b;
}

namespace {
double dist_to_band(double point, double lo, double hi) {
  if (point < lo) return lo - point;
  if (point > hi) return point - hi;
  return 0.0;
}
}  // namespace

double overflow_oracle(double lo_bound, double up_bound, const ToleranceBand& band) {
  if (!(lo_bound <= up_bound))
    throw ContractError("overflow_oracle: bound lower " + std::to_string(lo_bound) +
                        " exceeds upper " + std::to_string(up_bound));
  const double lo = band.lb - band.delta;
  const double hi = band.lb + band.delta;
  double total = 0.0;
  if (lo_bound < lo) {  // piece below the band: [lo_bound, min(up_bound, lo)]
    const double b = up_bound < lo ? up_bound : lo;
    total += dist_to_band(0.5 * (lo_bound + b), lo, hi);
  }
  if (up_bound > hi) {  // piece above the band: [max(lo_bound, hi), up_bound]
    const double a = lo_bound > hi ? lo_bound : hi;
    total += dist_to_band(0.5 * (a + up_bound), lo, hi);
  }
  return total;
}

double symbolic_error(double lo_bound, double up_bound, const ToleranceBand& band) {
  if (!(lo_bound <= up_bound))
    throw ContractError("symbolic_error: bound lower " + std::to_string(lo_bound) +
                        " exceeds upper " + std::to_string(up_bound));
  return 0.5 * (tolerance_error(lo_bound, band) + tolerance_error(up_bound, band));
}

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::Mse: return "mse";
    case LossKind::Interval: return "interval";
    case LossKind::Symbolic: return "symbolic";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& s) {
  if (s == "mse") return LossKind::Mse;
  if (s == "interval") return LossKind::Interval;
  if (s == "symbolic") return LossKind::Symbolic;
  throw ContractError("unknown loss kind '" + s + "' (expected mse, interval or symbolic)");
}

namespace {

// e = max(clip((lb-Δ) - p), clip(p - (lb+Δ))) elementwise over [B, d]
Value band_error(Graph& g, Value pred, Value lo_leaf, Value hi_leaf) {
  Value below = g.clip_nonneg(g.sub(lo_leaf, pred));
  Value above = g.clip_nonneg(g.sub(pred, hi_leaf));
  return g.vmax(below, above);
}

}  // namespace

LossNodes build_loss(Graph& g, const Network& net, const ParamBinding* params, Value input,
                     const Tensor& labels, const Tensor& delta, const RobustSpec* spec) {
  const int64_t d = net.output_dim();
  if (labels.rank() != 2 || labels.dim(1) != d)
    throw ShapeError("build_loss: labels " + shape_str(labels.shape()) +
                     " do not match output dim " + std::to_string(d));
  if (delta.numel() != d)
    throw ShapeError("build_loss: delta " + shape_str(delta.shape()) +
                     " does not match output dim " + std::to_string(d));
  for (int64_t j = 0; j < d; ++j)
    if (!(delta[j] >= 0)) throw ContractError("build_loss: delta must be >= 0");

  const int64_t batch = labels.dim(0);
  Tensor lo({batch, d}), hi({batch, d});
  for (int64_t i = 0; i < batch; ++i)
    for (int64_t j = 0; j < d; ++j) {
      lo[i * d + j] = labels[i * d + j] - delta[j];
      hi[i * d + j] = labels[i * d + j] + delta[j];
    }
  Value lo_leaf = g.leaf(lo);
  Value hi_leaf = g.leaf(hi);

  LossNodes out;
  Value err;
  if (spec && spec->kappa != 0.0) {
    spec->validate(net);
    Value fv = build_forward(g, net, input, 1, spec->layer_index - 1, params);
    BoxVal box = box_widen(g, fv, spec->kappa);
    box = build_box_forward(g, net, box, spec->layer_index, net.num_layers(), params);
    out.pred = box.lower;  // reporting handle; equals upper when kappa -> 0
    Value e_lo = band_error(g, box.lower, lo_leaf, hi_leaf);
    Value e_hi = band_error(g, box.upper, lo_leaf, hi_leaf);
    err = g.mul_scalar(g.add(e_lo, e_hi), 0.5);
  } else {
    Value pred = build_forward(g, net, input, 1, net.num_layers(), params);
    out.pred = pred;
    if (spec) {
      // kappa == 0: both bound endpoints are the point prediction
      spec->validate(net);
      Value e_lo = band_error(g, pred, lo_leaf, hi_leaf);
      Value e_hi = band_error(g, pred, lo_leaf, hi_leaf);
      err = g.mul_scalar(g.add(e_lo, e_hi), 0.5);
    } else {
      err = band_error(g, pred, lo_leaf, hi_leaf);
    }
  }
  out.per_sample = g.row_sum(g.mul(err, err));
  out.loss = g.reduce_mean(out.per_sample);
  return out;
}

namespace {

LossReport batched_loss_report(const Network& net, const Tensor& inputs, const Tensor& labels,
                               const Tensor& delta, const RobustSpec* spec) {
  if (inputs.rank() < 2)
    throw ShapeError("loss: inputs must be batched [N, ...], got " + shape_str(inputs.shape()));
  const int64_t n = inputs.dim(0);
  if (labels.rank() != 2 || labels.dim(0) != n)
    throw ShapeError("loss: labels " + shape_str(labels.shape()) + " do not match batch of " +
                     std::to_string(n));
  LossReport report;
  report.n = n;
  report.per_sample.reserve(static_cast<size_t>(n));
  const int64_t chunk = 128;
  const int64_t row = inputs.numel() / n;
  const int64_t d = labels.dim(1);
  for (int64_t begin = 0; begin < n; begin += chunk) {
    const int64_t count = std::min(chunk, n - begin);
    Shape in_shape = inputs.shape();
    in_shape[0] = count;
    Tensor in_chunk(in_shape);
    std::copy(inputs.data() + begin * row, inputs.data() + (begin + count) * row, in_chunk.mut());
    Tensor lb_chunk({count, d});
    std::copy(labels.data() + begin * d, labels.data() + (begin + count) * d, lb_chunk.mut());
    Graph g;
    Value x = g.leaf(in_chunk);
    LossNodes nodes = build_loss(g, net, nullptr, x, lb_chunk, delta, spec);
    const Tensor& per = g.value(nodes.per_sample);
    for (int64_t i = 0; i < count; ++i) report.per_sample.push_back(per[i]);
  }
  report.value = kern::active_kernels().sum(report.per_sample.data(),
                                            static_cast<int64_t>(report.per_sample.size())) /
                 static_cast<double>(n);
  return report;
}

}  // namespace

LossReport interval_tolerance_loss(const Network& net, const Tensor& inputs, const Tensor& labels,
                                   const Tensor& delta) {
  return batched_loss_report(net, inputs, labels, delta, nullptr);
}

LossReport symbolic_tolerance_loss(const Network& net, const Tensor& inputs, const Tensor& labels,
                                   const RobustSpec& spec) {
  return batched_loss_report(net, inputs, labels, spec.delta, &spec);
}

}  // namespace tolnet
