#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "tolnet/training.hpp"

using namespace tolnet;
using namespace tolnet::test;

TEST_CASE("xavier initialization: determinism, variance, zero biases") {
  Network a = init_weights(random_dense_net(0, {100, 100}), 4242);
  Network b = init_weights(random_dense_net(1, {100, 100}), 4242);
  CHECK(bits_equal(a.layers[0].weight, b.layers[0].weight));

  const Tensor& w = a.layers[0].weight;
  double mean = 0;
  for (int64_t i = 0; i < w.numel(); ++i) mean += w[i];
  mean /= static_cast<double>(w.numel());
  double var = 0;
  for (int64_t i = 0; i < w.numel(); ++i) var += (w[i] - mean) * (w[i] - mean);
  var /= static_cast<double>(w.numel());
  const double expected = 2.0 / (100 + 100);
  CHECK(var == doctest::Approx(expected).epsilon(0.2));

  for (int64_t i = 0; i < a.layers[0].bias.numel(); ++i) CHECK(a.layers[0].bias[i] == 0.0);

  Network c = init_weights(random_dense_net(0, {100, 100}), 4243);
  CHECK(!bits_equal(a.layers[0].weight, c.layers[0].weight));
}

TEST_CASE("adam: zero gradient is a fixed point from fresh state") {
  Network net = random_dense_net(7, {3, 2});
  Tensor before = net.layers[0].weight.clone();
  std::vector<Tensor*> params = param_tensors(net);
  AdamState state = make_adam_state(net);
  std::vector<Tensor> grads;
  for (const Tensor* p : params) grads.emplace_back(p->shape());
  OptimizerConfig cfg;
  cfg.learning_rate = 0.05;
  adam_step(params, grads, state, cfg);
  CHECK(state.step == 1);
  CHECK(bits_equal(net.layers[0].weight, before));
}

TEST_CASE("adam: first step magnitude is about alpha regardless of |g|") {
  for (double gmag : {1e-6, 1.0, 1e6}) {
    Network net = random_dense_net(7, {2, 1});
    Tensor before = net.layers[0].weight.clone();
    std::vector<Tensor*> params = param_tensors(net);
    AdamState state = make_adam_state(net);
    std::vector<Tensor> grads;
    for (const Tensor* p : params) grads.emplace_back(Tensor(p->shape(), gmag));
    OptimizerConfig cfg;
    cfg.learning_rate = 0.01;
    adam_step(params, grads, state, cfg);
    const double step0 = before[0] - net.layers[0].weight[0];
    CHECK(step0 > 0.0);  // moves against the gradient
    CHECK(step0 <= 0.01 * 1.0001);
    CHECK(step0 > 0.009 * (gmag > 1e-4 ? 1.0 : 0.01));  // tiny g is eps-damped
  }
}

TEST_CASE("adam: constant gradient settles at step size about alpha") {
  Network net = random_dense_net(7, {2, 1});
  std::vector<Tensor*> params = param_tensors(net);
  AdamState state = make_adam_state(net);
  std::vector<Tensor> grads;
  for (const Tensor* p : params) grads.emplace_back(Tensor(p->shape(), 0.37));
  OptimizerConfig cfg;
  cfg.learning_rate = 0.01;
  double prev = net.layers[0].weight[0];
  double step = 0;
  for (int i = 0; i < 200; ++i) {
    adam_step(params, grads, state, cfg);
    step = prev - net.layers[0].weight[0];
    prev = net.layers[0].weight[0];
  }
  CHECK(step == doctest::Approx(0.01).epsilon(0.05));
}

namespace {

// one-feature linear regression task: y = 2x - 1 on a handful of points
Dataset toy_regression() {
  Dataset ds;
  for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    Sample s;
    s.id = "toy" + std::to_string(ds.size());
    s.shape = {1};
    s.pixels = {static_cast<float>(x)};
    s.label = 2.0 * x - 1.0;
    ds.push_back(std::move(s));
  }
  return ds;
}

Network toy_net() {
  Network net;
  net.input_shape = {1};
  net.layers.push_back(Layer::dense("fc", 1, 1));
  return net;
}

}  // namespace

TEST_CASE("toy convex problem trains to near-zero loss") {
  Schedule sched;
  Stage stage;
  stage.kind = LossKind::Mse;
  stage.alpha = 0.05;
  stage.epochs = 500;
  sched.stages.push_back(stage);
  sched.batch_size = 5;
  OptimizerConfig cfg;
  cfg.seed = 3;
  TrainResult res = run_schedule(init_weights(toy_net(), 3), toy_regression(), sched, cfg);
  CHECK(res.log.back().loss < 1e-6);
  CHECK(res.log.size() == 500);
}

TEST_CASE("symbolic stage with delta=0 kappa=0 reproduces mse bit for bit") {
  Dataset ds = toy_regression();
  Network net0 = init_weights(toy_net(), 11);
  OptimizerConfig cfg;
  cfg.seed = 11;

  Schedule mse;
  Stage s1;
  s1.kind = LossKind::Mse;
  s1.alpha = 0.01;
  s1.epochs = 40;
  mse.stages.push_back(s1);
  mse.batch_size = 2;

  Schedule sym = mse;
  sym.stages[0].kind = LossKind::Symbolic;
  sym.stages[0].spec = RobustSpec{Tensor({1}, 0.0), 1, 0.0};
  sym.stages[0].has_spec = true;

  TrainResult a = run_schedule(net0, ds, mse, cfg);
  TrainResult b = run_schedule(net0, ds, sym, cfg);
  CHECK(bits_equal(a.net.layers[0].weight, b.net.layers[0].weight));
  CHECK(bits_equal(a.net.layers[0].bias, b.net.layers[0].bias));
  for (size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("training determinism and monotone smoke property") {
  Dataset ds = toy_regression();
  Schedule sched;
  Stage stage;
  stage.kind = LossKind::Mse;
  stage.alpha = 0.02;
  stage.epochs = 30;
  sched.stages.push_back(stage);
  sched.batch_size = 2;
  OptimizerConfig cfg;
  cfg.seed = 5;
  Network net0 = init_weights(toy_net(), 5);
  TrainResult a = run_schedule(net0, ds, sched, cfg);
  TrainResult b = run_schedule(net0, ds, sched, cfg);
  CHECK(bits_equal(a.net.layers[0].weight, b.net.layers[0].weight));
  for (size_t i = 5; i + 1 < a.log.size(); ++i)
    CHECK(a.log[i + 1].loss <= a.log[i].loss * 1.0001);
}

TEST_CASE("already-satisfied bands: zero loss, parameters untouched") {
  // labels equal predictions, wide delta, tiny kappa on an affine suffix
  Network net = init_weights(random_dense_net(21, {2, 4, 1}), 21);
  Dataset ds;
  RngStream rng(21, "sat");
  for (int i = 0; i < 6; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.shape = {2};
    s.pixels = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))};
    s.label = forward(net, s.input())[0];
    ds.push_back(std::move(s));
  }
  Schedule sched;
  Stage stage;
  stage.kind = LossKind::Symbolic;
  stage.alpha = 0.01;
  stage.epochs = 3;
  stage.spec = RobustSpec{Tensor({1}, 10.0), net.num_layers(), 0.001};
  stage.has_spec = true;
  sched.stages.push_back(stage);
  sched.kappa_warmup = false;
  OptimizerConfig cfg;
  cfg.seed = 21;
  TrainResult res = run_schedule(net, ds, sched, cfg);
  for (const EpochRecord& r : res.log) CHECK(r.loss == 0.0);
  CHECK(bits_equal(res.net.layers[0].weight, net.layers[0].weight));
  CHECK(bits_equal(res.net.layers[2].weight, net.layers[2].weight));
}

TEST_CASE("kappa warm-up ramps over the first half of a symbolic stage") {
  Dataset ds = toy_regression();
  Schedule sched;
  Stage stage;
  stage.kind = LossKind::Symbolic;
  stage.alpha = 0.001;
  stage.epochs = 6;
  stage.spec = RobustSpec{Tensor({1}, 10.0), 1, 0.1};
  stage.has_spec = true;
  sched.stages.push_back(stage);
  OptimizerConfig cfg;
  TrainResult res = run_schedule(init_weights(toy_net(), 1), ds, sched, cfg);
  REQUIRE(res.log.size() == 6);
  CHECK(res.log[0].kappa == doctest::Approx(0.1 / 3));
  CHECK(res.log[1].kappa == doctest::Approx(0.2 / 3));
  CHECK(res.log[2].kappa == 0.1);
  CHECK(res.log[5].kappa == 0.1);

  sched.kappa_warmup = false;
  TrainResult res2 = run_schedule(init_weights(toy_net(), 1), ds, sched, cfg);
  CHECK(res2.log[0].kappa == 0.1);
}

TEST_CASE("schedule and input validation") {
  Dataset empty;
  Schedule sched;
  Stage stage;
  stage.kind = LossKind::Mse;
  stage.alpha = 0.01;
  stage.epochs = 1;
  sched.stages.push_back(stage);
  OptimizerConfig cfg;
  CHECK_THROWS_AS(run_schedule(toy_net(), empty, sched, cfg), ContractError);

  Schedule bad;
  CHECK_THROWS_AS(bad.validate(), ContractError);  // no stages
  bad.stages.push_back(stage);
  bad.stages[0].epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad.stages[0].epochs = 1;
  bad.stages[0].kind = LossKind::Symbolic;  // without spec
  CHECK_THROWS_AS(bad.validate(), ContractError);

  OptimizerConfig bad_cfg;
  bad_cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(bad_cfg.validate(), ContractError);
}

TEST_CASE("diverging run aborts with a diagnostic naming the batch") {
  Dataset ds = toy_regression();
  for (Sample& s : ds) s.label *= 1e200;  // squared error overflows to inf on the first batch
  Schedule sched;
  Stage stage;
  stage.kind = LossKind::Mse;
  stage.alpha = 0.01;
  stage.epochs = 2;
  sched.stages.push_back(stage);
  OptimizerConfig cfg;
  try {
    run_schedule(init_weights(toy_net(), 2), ds, sched, cfg);
    CHECK(false);
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage 1") != std::string::npos);
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}
