#pragma once

#include <functional>
#include <vector>

#include "tolnet/data.hpp"
#include "tolnet/interval.hpp"
#include "tolnet/losses.hpp"
#include "tolnet/network.hpp"

namespace tolnet {

struct OptimizerConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m, v;  // first/second moments, aligned with param_tensors order
  int64_t step = 0;
};

// Parameter tensors in a fixed order (layer order, weight before bias).
std::vector<Tensor*> param_tensors(Network& net);
std::vector<const Tensor*> param_tensors(const Network& net);

AdamState make_adam_state(const Network& net);

// One bias-corrected Adam update. grads must align with param_tensors(net).
void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state,
               const OptimizerConfig& config);

// Xavier/Glorot uniform initialization of all dense/conv weights
// (U[-a, a] with a = sqrt(6/(fan_in+fan_out))), zero biases. Deterministic
// per seed; the draw for each element depends only on (seed, layer, index).
Network init_weights(Network net, uint64_t seed);

struct Stage {
  LossKind kind = LossKind::Mse;
  double alpha = 0.001;
  int64_t epochs = 1;
  RobustSpec spec{Tensor({1}), 1, 0.0};  // used when kind == Symbolic
  bool has_spec = false;
};

struct Schedule {
  std::vector<Stage> stages;
  int64_t batch_size = 32;
  // Ramp kappa linearly from 0 to its target over the first half of each
  // symbolic stage. Disable to apply the full kappa from the first epoch.
  bool kappa_warmup = true;
  bool reset_adam_per_stage = true;

  void validate() const;
};

struct EpochRecord {
  int64_t stage = 0;
  LossKind kind = LossKind::Mse;
  int64_t epoch = 0;  // within the stage
  double loss = 0.0;  // mean per-sample loss over the epoch's batches
  double wall_ms = 0.0;
  double kappa = 0.0;  // kappa actually applied this epoch
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  Network net;
  std::vector<EpochRecord> log;
};

// Runs the stages in order on a copy of net. Shuffles per epoch with the
// seeded generator, logs one record per epoch, aborts with NumericError
// (naming stage/epoch/batch) if a batch loss goes non-finite.
TrainResult run_schedule(Network net, const Dataset& train, const Schedule& schedule,
                         const OptimizerConfig& config, const EpochCallback& on_epoch = {});

}  // namespace tolnet
