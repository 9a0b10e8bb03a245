#include "tolnet/attack.hpp"

#include <cmath>

#include "tolnet/graph.hpp"
#include "tolnet/losses.hpp"

namespace tolnet {

std::vector<double> AttackConfig::default_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(0.005 * i);
  return grid;
}

void AttackConfig::validate() const {
  if (!(deviation_threshold > 0)) throw ContractError("attack: deviation threshold must be > 0");
  if (epsilon_grid.empty()) throw ContractError("attack: epsilon grid is empty");
  double prev = 0.0;
  for (double e : epsilon_grid) {
    if (!(e > prev)) throw ContractError("attack: epsilon grid must be strictly increasing and > 0");
    prev = e;
  }
  if (!(equality_band >= 0)) throw ContractError("attack: equality band must be >= 0");
  if (!(perfect_delta >= 0)) throw ContractError("attack: perfect_delta must be >= 0");
}

namespace {

Tensor batch_of_one(const Tensor& t) {
  Shape s = t.shape();
  s.insert(s.begin(), 1);
  return t.reshaped(std::move(s));
}

// d/d_in of sum_j (f_j(in) - lb_j)^2
Tensor deviation_loss_input_grad(const Network& net, const Tensor& in, const Tensor& label) {
  Graph g;
  Value x = g.leaf(batch_of_one(in), /*requires_grad=*/true);
  Value pred = build_forward(g, net, x, 1, net.num_layers(), nullptr);
  Value diff = g.sub(pred, g.leaf(label.reshaped({1, label.numel()})));
  Value loss = g.reduce_sum(g.mul(diff, diff));
  g.backward(loss);
  return g.grad(x).reshaped(in.shape());
}

double max_abs_deviation(const Tensor& pred, const Tensor& label) {
  double worst = 0.0;
  for (int64_t j = 0; j < pred.numel(); ++j)
    worst = std::max(worst, std::fabs(pred[j] - label[j]));
  return worst;
}

}  // namespace

Tensor fgsm_step(const Network& net, const Tensor& in, const Tensor& label, double eps) {
  if (eps < 0) throw ContractError("fgsm_step: eps must be >= 0");
  Tensor grad = deviation_loss_input_grad(net, in, label);
  Tensor step = t_mul_scalar(t_sign(grad), eps);
  return t_clamp(t_add(in, step), -1.0, 1.0);
}

MinEpsResult minimal_epsilon(const Network& net, const Tensor& in, const Tensor& label,
                             const AttackConfig& config) {
  config.validate();
  MinEpsResult res;
  Tensor pred0 = forward(net, in);
  res.clean_deviation = max_abs_deviation(pred0, label);
  if (res.clean_deviation > config.perfect_delta) {
    res.status = MinEpsResult::Status::Skipped;
    return res;
  }
  const Tensor sgn = t_sign(deviation_loss_input_grad(net, in, label));
  const int64_t d = net.output_dim();

  // evaluate grid candidates in batches; first success wins
  const int64_t chunk = 32;
  const int64_t grid_n = static_cast<int64_t>(config.epsilon_grid.size());
  const int64_t row = in.numel();
  for (int64_t begin = 0; begin < grid_n; begin += chunk) {
    const int64_t count = std::min(chunk, grid_n - begin);
    Shape batch_shape = in.shape();
    batch_shape.insert(batch_shape.begin(), count);
    Tensor batch(batch_shape);
    for (int64_t i = 0; i < count; ++i) {
      const double eps = config.epsilon_grid[static_cast<size_t>(begin + i)];
      Tensor cand = t_clamp(t_add(in, t_mul_scalar(sgn, eps)), -1.0, 1.0);
      std::copy(cand.data(), cand.data() + row, batch.mut() + i * row);
    }
    Tensor preds = forward_batch(net, batch);
    for (int64_t i = 0; i < count; ++i) {
      double worst = 0.0;
      for (int64_t j = 0; j < d; ++j)
        worst = std::max(worst, std::fabs(preds[i * d + j] - label[j]));
      if (worst >= config.deviation_threshold) {
        res.status = MinEpsResult::Status::Found;
        res.eps = config.epsilon_grid[static_cast<size_t>(begin + i)];
        return res;
      }
    }
  }
  res.status = MinEpsResult::Status::NotFound;
  return res;
}

double ComparisonReport::frac_a_larger() const {
  return counted() ? static_cast<double>(a_larger) / static_cast<double>(counted()) : 0.0;
}
double ComparisonReport::frac_roughly_equal() const {
  return counted() ? static_cast<double>(roughly_equal) / static_cast<double>(counted()) : 0.0;
}
double ComparisonReport::frac_b_larger() const {
  return counted() ? static_cast<double>(b_larger) / static_cast<double>(counted()) : 0.0;
}

ComparisonReport compare_models(const Network& net_a, const Network& net_b, const Dataset& eval,
                                const AttackConfig& config) {
  config.validate();
  if (layer_shapes(net_a).front() != layer_shapes(net_b).front() ||
      net_a.output_dim() != net_b.output_dim())
    throw ContractError("compare_models: models do not share input/output shapes");
  ComparisonReport report;
  for (const Sample& s : eval) {
    ComparisonRow row;
    row.id = s.id;
    Tensor in = s.input();
    Tensor label = Tensor::from({1}, {s.label});
    row.a = minimal_epsilon(net_a, in, label, config);
    row.b = minimal_epsilon(net_b, in, label, config);
    using St = MinEpsResult::Status;
    if (row.a.status == St::Skipped || row.b.status == St::Skipped) {
      row.counted = false;
      report.skipped += 1;
    } else {
      row.counted = true;
      const bool fa = row.a.status == St::Found;
      const bool fb = row.b.status == St::Found;
      if (!fa && !fb) row.bucket = Bucket::RoughlyEqual;
      else if (!fa) row.bucket = Bucket::ALarger;
      else if (!fb) row.bucket = Bucket::BLarger;
      else {
        const double diff = row.a.eps - row.b.eps;
        if (std::fabs(diff) <= config.equality_band) row.bucket = Bucket::RoughlyEqual;
        else row.bucket = diff > 0 ? Bucket::ALarger : Bucket::BLarger;
      }
      switch (row.bucket) {
        case Bucket::ALarger: report.a_larger += 1; break;
        case Bucket::RoughlyEqual: report.roughly_equal += 1; break;
        case Bucket::BLarger: report.b_larger += 1; break;
      }
    }
    report.rows.push_back(std::move(row));
  }
  if (report.counted() == 0)
    throw ContractError("compare_models: no eligible images (every sample failed the "
                        "originally-perfect precondition)");
  return report;
}

}  // namespace tolnet
