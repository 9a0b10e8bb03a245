#include "tolnet/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "tolnet/kernels.hpp"
#include "tolnet/rng.hpp"

namespace tolnet {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0)) throw ContractError("optimizer: learning rate must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ContractError("optimizer: beta1/beta2 must lie in [0, 1)");
  if (!(epsilon > 0)) throw ContractError("optimizer: epsilon must be > 0");
}

void Schedule::validate() const {
  if (stages.empty()) throw ContractError("schedule has no stages");
  if (batch_size < 1) throw ContractError("schedule: batch size must be >= 1");
  for (const Stage& s : stages) {
    if (s.epochs < 1) throw ContractError("schedule: every stage needs epochs >= 1");
    if (!(s.alpha > 0)) throw ContractError("schedule: every stage needs alpha > 0");
    if (s.kind != LossKind::Mse && !s.has_spec)
      throw ContractError("schedule: interval/symbolic stages must carry tolerances");
  }
}

std::vector<Tensor*> param_tensors(Network& net) {
  std::vector<Tensor*> out;
  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> param_tensors(const Network& net) {
  std::vector<const Tensor*> out;
  for (const Layer& l : net.layers) {
    if (!l.has_params()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

AdamState make_adam_state(const Network& net) {
  AdamState st;
  for (const Tensor* p : param_tensors(net)) {
    st.m.emplace_back(p->shape());
    st.v.emplace_back(p->shape());
  }
  return st;
}

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state,
               const OptimizerConfig& config) {
  config.validate();
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ContractError("adam_step: parameter/gradient/state counts disagree");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const auto& K = kern::active_kernels();
  for (size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "adam_step");
    // parameter storage may be shared (e.g. with a saved model); update a
    // fresh buffer
    Tensor p = params[i]->clone();
    K.adam(p.mut(), grads[i].data(), state.m[i].mut(), state.v[i].mut(), p.numel(),
           config.learning_rate, config.beta1, config.beta2, config.epsilon, bc1, bc2);
    *params[i] = p;
  }
}

Network init_weights(Network net, uint64_t seed) {
  for (size_t li = 0; li < net.layers.size(); ++li) {
    Layer& l = net.layers[li];
    if (!l.has_params()) continue;
    int64_t fan_in, fan_out;
    if (l.kind == LayerKind::Dense) {
      fan_in = l.weight.dim(0);
      fan_out = l.weight.dim(1);
    } else {
      const int64_t window = l.weight.dim(0) * l.weight.dim(1);
      fan_in = window * l.weight.dim(2);
      fan_out = window * l.weight.dim(3);
    }
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    RngStream rng(seed, "xavier", static_cast<uint64_t>(li));
    Tensor w(l.weight.shape());
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-a, a);
    l.weight = w;
    l.bias = Tensor(l.bias.shape());  // zeros
  }
  return net;
}

namespace {

double stage_kappa(const Stage& stage, int64_t epoch, bool warmup) {
  if (stage.kind != LossKind::Symbolic) return 0.0;
  if (!warmup) return stage.spec.kappa;
  const int64_t ramp_epochs = (stage.epochs + 1) / 2;
  if (ramp_epochs <= 0 || epoch + 1 >= ramp_epochs) return stage.spec.kappa;
  return stage.spec.kappa * (static_cast<double>(epoch + 1) / static_cast<double>(ramp_epochs));
}

}  // namespace

TrainResult run_schedule(Network net, const Dataset& train, const Schedule& schedule,
                         const OptimizerConfig& config, const EpochCallback& on_epoch) {
  schedule.validate();
  config.validate();
  if (train.empty()) throw ContractError("run_schedule: training set is empty");
  net.validate();
  if (net.output_dim() != 1)
    throw ContractError("run_schedule: datasets carry scalar labels; network output dim is " +
                        std::to_string(net.output_dim()));
  for (const Stage& s : schedule.stages) {
    if (s.kind == LossKind::Symbolic) {
      s.spec.validate(net);
    } else if (s.kind == LossKind::Interval) {
      if (s.spec.delta.numel() != net.output_dim())
        throw ShapeError("schedule: stage delta does not match network output dim");
      for (int64_t j = 0; j < s.spec.delta.numel(); ++j)
        if (!(s.spec.delta[j] >= 0)) throw ContractError("schedule: delta must be >= 0");
    }
  }

  const int64_t n = static_cast<int64_t>(train.size());
  const Tensor zero_delta({1});
  TrainResult result;
  std::vector<Tensor*> params = param_tensors(net);
  AdamState state = make_adam_state(net);
  const auto& K = kern::active_kernels();

  for (size_t si = 0; si < schedule.stages.size(); ++si) {
    const Stage& stage = schedule.stages[si];
    if (schedule.reset_adam_per_stage && si > 0) state = make_adam_state(net);
    OptimizerConfig stage_cfg = config;
    stage_cfg.learning_rate = stage.alpha;

    for (int64_t epoch = 0; epoch < stage.epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      const double kappa = stage_kappa(stage, epoch, schedule.kappa_warmup);

      std::vector<int64_t> order(static_cast<size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      RngStream shuffle(config.seed, "shuffle", si, static_cast<uint64_t>(epoch));
      for (int64_t i = n - 1; i > 0; --i)
        std::swap(order[static_cast<size_t>(i)],
                  order[static_cast<size_t>(shuffle.below(static_cast<uint64_t>(i + 1)))]);

      std::vector<double> epoch_terms;
      epoch_terms.reserve(static_cast<size_t>(n));
      for (int64_t b0 = 0; b0 < n; b0 += schedule.batch_size) {
        const int64_t count = std::min(schedule.batch_size, n - b0);
        std::vector<int64_t> idx(order.begin() + b0, order.begin() + b0 + count);
        Tensor inputs = make_batch_inputs(train, idx);
        Tensor labels = make_batch_labels(train, idx);

        Graph g;
        ParamBinding binding = bind_params(g, net, /*requires_grad=*/true);
        Value x = g.leaf(inputs);
        const Tensor& delta = stage.kind == LossKind::Mse ? zero_delta : stage.spec.delta;
        RobustSpec spec = stage.spec;
        spec.kappa = kappa;
        const RobustSpec* spec_ptr = stage.kind == LossKind::Symbolic ? &spec : nullptr;
        LossNodes nodes = build_loss(g, net, &binding, x, labels, delta, spec_ptr);

        const double batch_loss = g.value(nodes.loss)[0];
        if (!std::isfinite(batch_loss))
          throw NumericError("non-finite loss in stage " + std::to_string(si + 1) + ", epoch " +
                             std::to_string(epoch + 1) + ", batch " +
                             std::to_string(b0 / schedule.batch_size + 1));
        const Tensor& per = g.value(nodes.per_sample);
        for (int64_t i = 0; i < per.numel(); ++i) epoch_terms.push_back(per[i]);

        g.backward(nodes.loss);
        std::vector<Tensor> grads;
        grads.reserve(params.size());
        for (size_t li = 0; li < net.layers.size(); ++li) {
          if (!net.layers[li].has_params()) continue;
          grads.push_back(g.grad(binding.weight[li]));
          grads.push_back(g.grad(binding.bias[li]));
        }
        adam_step(params, grads, state, stage_cfg);
      }

      EpochRecord rec;
      rec.stage = static_cast<int64_t>(si + 1);
      rec.kind = stage.kind;
      rec.epoch = epoch + 1;
      rec.loss = K.sum(epoch_terms.data(), static_cast<int64_t>(epoch_terms.size())) /
                 static_cast<double>(n);
      rec.kappa = kappa;
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
      result.log.push_back(rec);
      if (on_epoch) on_epoch(rec);
    }
  }
  result.net = std::move(net);
  return result;
}

}  // namespace tolnet
