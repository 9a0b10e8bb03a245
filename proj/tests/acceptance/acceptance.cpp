// Acceptance suite: one pass/fail line per criterion. Every tolerance and
// threshold is fixed here, in code. Run all criteria (default) or a single
// one with --criterion N. Exits nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "tolnet/attack.hpp"
#include "tolnet/data.hpp"
#include "tolnet/interval.hpp"
#include "tolnet/losses.hpp"
#include "tolnet/network.hpp"
#include "tolnet/rng.hpp"
#include "tolnet/tensor.hpp"
#include "tolnet/training.hpp"

using namespace tolnet;

namespace {

Tensor random_tensor(RngStream& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Network random_dense_net(uint64_t seed, const std::vector<int64_t>& dims) {
  Network net;
  net.input_shape = {dims[0]};
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    net.layers.push_back(Layer::dense("fc" + std::to_string(i), dims[i], dims[i + 1]));
    if (i + 2 < dims.size()) net.layers.push_back(Layer::relu("relu" + std::to_string(i)));
  }
  net = init_weights(net, seed);
  RngStream rng(seed, "acc-bias");
  for (Layer& l : net.layers)
    if (l.has_params())
      for (int64_t i = 0; i < l.bias.numel(); ++i) l.bias[i] = rng.uniform(-0.5, 0.5);
  return net;
}

Network random_conv_net(uint64_t seed, int64_t out_dim) {
  Network net;
  net.input_shape = {6, 8, 1};
  net.layers.push_back(Layer::conv2d("c1", 3, 3, 1, 4, 1));
  net.layers.push_back(Layer::relu("c1_relu"));
  net.layers.push_back(Layer::flatten("flat"));
  Shape flat = layer_shapes(net).back();
  net.layers.push_back(Layer::dense("fc1", flat[0], 10));
  net.layers.push_back(Layer::relu("fc1_relu"));
  net.layers.push_back(Layer::dense("fc2", 10, out_dim));
  net = init_weights(net, seed);
  RngStream rng(seed, "acc-bias");
  for (Layer& l : net.layers)
    if (l.has_params())
      for (int64_t i = 0; i < l.bias.numel(); ++i) l.bias[i] = rng.uniform(-0.3, 0.3);
  return net;
}

Tensor random_batch(RngStream& rng, const Network& net, int64_t n) {
  Shape s = net.input_shape;
  s.insert(s.begin(), n);
  return random_tensor(rng, std::move(s));
}

double mse_oracle(const Network& net, const Tensor& inputs, const Tensor& labels) {
  const int64_t n = inputs.dim(0);
  const int64_t row = inputs.numel() / n;
  const int64_t d = labels.dim(1);
  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    Tensor one(net.input_shape);
    std::copy(inputs.data() + i * row, inputs.data() + (i + 1) * row, one.mut());
    Tensor pred = forward(net, one);
    for (int64_t j = 0; j < d; ++j) {
      const double diff = pred[j] - labels[i * d + j];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(n);
}

bool rel_close(double a, double b, double tol) {
  const double mag = std::max(std::fabs(a), std::fabs(b));
  if (mag == 0.0) return true;
  return std::fabs(a - b) / mag < tol;
}

// ---------------------------------------------------------------- criterion 1
std::string criterion_clip_equivalence() {
  RngStream rng(1001, "c1");
  for (int64_t i = 0; i < 100000; ++i) {
    const double pred = rng.uniform(-1000, 1000);
    const ToleranceBand band{rng.uniform(-1000, 1000), rng.uniform(0, 10)};
    const double piecewise = tolerance_error(pred, band);
    const double clipped = tolerance_error_clip(pred, band);
    if (piecewise != clipped) {
      std::ostringstream os;
      os << "mismatch at pred=" << pred << " lb=" << band.lb << " delta=" << band.delta << ": "
         << piecewise << " vs " << clipped;
      return os.str();
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 2
std::string criterion_mse_specialization() {
  for (uint64_t trial = 0; trial < 100; ++trial) {
    Network net = trial % 4 == 3 ? random_conv_net(trial, 2)
                                 : random_dense_net(trial, {5, 9, 7, 2});
    RngStream rng(trial, "c2");
    const int64_t n = 3 + static_cast<int64_t>(rng.below(6));
    Tensor inputs = random_batch(rng, net, n);
    Tensor labels = random_tensor(rng, {n, 2}, -3.0, 3.0);
    const double loss = interval_tolerance_loss(net, inputs, labels, Tensor({2}, 0.0)).value;
    const double mse = mse_oracle(net, inputs, labels);
    if (!rel_close(loss, mse, 1e-9)) {
      std::ostringstream os;
      os << "trial " << trial << ": interval(delta=0)=" << loss << " vs mse=" << mse;
      return os.str();
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 3
std::string criterion_endpoint_equivalence() {
  {
    const ToleranceBand band{1.5, 2.5};  // [-1, 4]
    if (symbolic_error(-2.0, 5.5, band) != 1.25) return "worked value [-2,5.5] != 1.25";
    if (overflow_oracle(-2.0, 5.5, band) != 1.25) return "oracle value [-2,5.5] != 1.25";
    if (symbolic_error(5.5, 9.0, band) != 3.25) return "worked value [5.5,9] != 3.25";
    if (overflow_oracle(5.5, 9.0, band) != 3.25) return "oracle value [5.5,9] != 3.25";
  }
  RngStream rng(1003, "c3");
  for (int64_t i = 0; i < 100000; ++i) {
    double a = rng.uniform(-1000, 1000);
    double b = rng.uniform(-1000, 1000);
    if (a > b) std::swap(a, b);
    const ToleranceBand band{rng.uniform(-1000, 1000), rng.uniform(0, 10)};
    const double fast = symbolic_error(a, b, band);
    const double slow = overflow_oracle(a, b, band);
    if (std::fabs(fast - slow) >= 1e-12) {
      std::ostringstream os;
      os << "gap " << std::fabs(fast - slow) << " at [" << a << ", " << b << "] lb=" << band.lb
         << " delta=" << band.delta;
      return os.str();
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 4
std::string criterion_kappa0_specialization() {
  for (uint64_t trial = 0; trial < 50; ++trial) {
    Network net = trial % 4 == 3 ? random_conv_net(trial + 500, 1)
                                 : random_dense_net(trial + 500, {4, 8, 6, 1});
    RngStream rng(trial, "c4");
    const int64_t n = 3 + static_cast<int64_t>(rng.below(5));
    Tensor inputs = random_batch(rng, net, n);
    Tensor labels = random_tensor(rng, {n, 1}, -2.0, 2.0);
    Tensor delta({1}, rng.uniform(0.0, 2.0));
    const int64_t lt = 2 + static_cast<int64_t>(rng.below(
                               static_cast<uint64_t>(net.num_layers() - 1)));
    const double sym =
        symbolic_tolerance_loss(net, inputs, labels, {delta, lt, 0.0}).value;
    const double interval = interval_tolerance_loss(net, inputs, labels, delta).value;
    if (!rel_close(sym, interval, 1e-9)) {
      std::ostringstream os;
      os << "trial " << trial << ": symbolic(kappa=0)=" << sym << " vs interval=" << interval;
      return os.str();
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 5
std::string criterion_bound_soundness() {
  const double kappas[] = {0.01, 0.1, 1.0};
  for (uint64_t net_i = 0; net_i < 20; ++net_i) {
    Network net = net_i % 4 == 3 ? random_conv_net(net_i + 90, 2)
                                 : random_dense_net(net_i + 90, {6, 11, 7, 2});
    RngStream rng(net_i, "c5");
    for (int input_i = 0; input_i < 10; ++input_i) {
      Tensor in = random_tensor(rng, net.input_shape);
      const int64_t lt =
          1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(net.num_layers())));
      IntervalTensor prev(Tensor({net.output_dim()}, 0.0), Tensor({net.output_dim()}, 0.0));
      bool have_prev = false;
      for (double kappa : kappas) {
        RobustSpec spec{Tensor({net.output_dim()}, 0.0), lt, kappa};
        IntervalTensor bounds = output_bounds(net, in, spec);
        if (have_prev) {
          for (int64_t j = 0; j < bounds.lower.numel(); ++j)
            if (bounds.lower[j] > prev.lower[j] || bounds.upper[j] < prev.upper[j]) {
              std::ostringstream os;
              os << "monotonicity broke: net " << net_i << " input " << input_i << " kappa "
                 << kappa << " dim " << j;
              return os.str();
            }
        }
        prev = bounds;
        have_prev = true;
        Tensor fv = forward_to(net, lt - 1, in);
        for (int trial = 0; trial < 1000; ++trial) {
          Tensor perturbed = fv.clone();
          for (int64_t i = 0; i < perturbed.numel(); ++i)
            perturbed[i] += rng.uniform(-kappa, kappa);
          Tensor out = forward_from(net, lt, perturbed);
          for (int64_t j = 0; j < out.numel(); ++j)
            if (out[j] < bounds.lower[j] || out[j] > bounds.upper[j]) {
              std::ostringstream os;
              os << "violation: net " << net_i << " input " << input_i << " kappa " << kappa
                 << " trial " << trial << " dim " << j << ": " << out[j] << " outside ["
                 << bounds.lower[j] << ", " << bounds.upper[j] << "]";
              return os.str();
            }
        }
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 6
std::string criterion_provable_guarantee() {
  const double delta = 10.0;
  const double kappa = 0.01;
  Dataset samples = synthetic_dataset(20, 600);

  Network net;
  net.input_shape = samples.front().shape;
  net.layers.push_back(Layer::flatten("flatten"));
  Shape flat = layer_shapes(net).back();
  net.layers.push_back(Layer::dense("hidden", flat[0], 16));
  net.layers.push_back(Layer::relu("hidden_relu"));
  net.layers.push_back(Layer::dense("out", 16, 1));
  net = init_weights(net, 600);
  const int64_t lt = resolve_perturb_layer(net, "hidden");

  OptimizerConfig cfg;
  cfg.seed = 600;
  Schedule warm;
  {
    Stage s;
    s.kind = LossKind::Mse;
    s.alpha = 0.02;
    s.epochs = 150;
    warm.stages.push_back(s);
    warm.batch_size = 8;
  }
  TrainResult warmed = run_schedule(net, samples, warm, cfg);
  net = warmed.net;

  Schedule polish;
  {
    Stage s;
    s.kind = LossKind::Symbolic;
    s.alpha = 0.005;
    s.epochs = 50;
    s.spec = RobustSpec{Tensor({1}, delta), lt, kappa};
    s.has_spec = true;
    polish.stages.push_back(s);
    polish.batch_size = 8;
    polish.kappa_warmup = false;
  }
  double loss = 1.0;
  for (int rounds = 0; rounds < 12 && loss >= 1e-12; ++rounds) {
    TrainResult r = run_schedule(net, samples, polish, cfg);
    net = r.net;
    loss = r.log.back().loss;
  }
  if (loss >= 1e-12) {
    std::ostringstream os;
    os << "symbolic loss stalled at " << loss << " (needs < 1e-12)";
    return os.str();
  }

  RngStream rng(601, "c6");
  for (const Sample& s : samples) {
    Tensor fv = forward_to(net, lt - 1, s.input());
    for (int trial = 0; trial < 10000; ++trial) {
      Tensor perturbed = fv.clone();
      for (int64_t i = 0; i < perturbed.numel(); ++i) perturbed[i] += rng.uniform(-kappa, kappa);
      const double out = forward_from(net, lt, perturbed)[0];
      if (std::fabs(out - s.label) > delta) {
        std::ostringstream os;
        os << "sample " << s.id << " trial " << trial << ": output " << out << " outside ["
           << s.label - delta << ", " << s.label + delta << "]";
        return os.str();
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------- criterion 7
std::string criterion_gradient_integrity() {
  int points = 0;
  for (uint64_t trial = 0; trial < 10; ++trial) {
    Network net = random_dense_net(trial + 700, {3, 6, 1});
    RngStream rng(trial, "c7");
    Tensor inputs = random_batch(rng, net, 4);
    Tensor labels = random_tensor(rng, {4, 1}, -1.5, 1.5);
    Tensor delta({1}, 0.2);
    RobustSpec spec{delta, 2, 0.03};
    for (int symbolic = 0; symbolic < 2; ++symbolic) {
      auto loss_of = [&](const Network& n) {
        return symbolic ? symbolic_tolerance_loss(n, inputs, labels, spec).value
                        : interval_tolerance_loss(n, inputs, labels, delta).value;
      };
      Graph g;
      ParamBinding binding = bind_params(g, net, true);
      Value x = g.leaf(inputs);
      LossNodes nodes =
          build_loss(g, net, &binding, x, labels, delta, symbolic ? &spec : nullptr);
      g.backward(nodes.loss);
      const double h = 1e-5;
      for (size_t li = 0; li < net.layers.size(); ++li) {
        if (!net.layers[li].has_params()) continue;
        Tensor analytic = g.grad(binding.weight[li]);
        for (int64_t i = 0; i < analytic.numel(); i += 2) {
          if (std::fabs(net.layers[li].weight[i]) < 1e-3) continue;  // weight sign kink
          Network plus = net, minus = net;
          plus.layers[li].weight = net.layers[li].weight.clone();
          minus.layers[li].weight = net.layers[li].weight.clone();
          plus.layers[li].weight[i] += h;
          minus.layers[li].weight[i] -= h;
          const double numeric = (loss_of(plus) - loss_of(minus)) / (2 * h);
          const double mag = std::max(std::fabs(analytic[i]), std::fabs(numeric));
          const bool ok = mag < 1e-6 ? std::fabs(analytic[i] - numeric) < 1e-8
                                     : std::fabs(analytic[i] - numeric) / mag < 1e-4;
          if (!ok) {
            std::ostringstream os;
            os << (symbolic ? "symbolic" : "interval") << " loss, trial " << trial << ", layer "
               << li << ", weight " << i << ": analytic " << analytic[i] << " vs numeric "
               << numeric;
            return os.str();
          }
          ++points;
        }
      }
    }
  }
  if (points < 200) {
    std::ostringstream os;
    os << "only " << points << " gradient points checked (need >= 200)";
    return os.str();
  }
  return "";
}

// ---------------------------------------------------------------- criterion 8
std::string criterion_attack_trend() {
  const double delta = 10.0;
  const double kappa = 0.01;
  Dataset train = synthetic_dataset(2000, 2024);
  Dataset eval_set = synthetic_dataset(200, 9001);

  AttackConfig atk;
  atk.deviation_threshold = 80.0;
  atk.epsilon_grid = AttackConfig::default_grid();
  atk.equality_band = 0.05;
  atk.perfect_delta = delta;

  auto band_accuracy = [&](const Network& net) {
    int64_t hits = 0;
    for (const Sample& s : eval_set)
      if (std::fabs(forward(net, s.input())[0] - s.label) <= delta) ++hits;
    return static_cast<double>(hits) / static_cast<double>(eval_set.size());
  };

  int trend_hits = 0;
  std::ostringstream detail;
  for (uint64_t seed = 0; seed < 4; ++seed) {
    Network proto = default_architecture(train.front().shape, 1);
    const int64_t lt = resolve_perturb_layer(proto, "fc40");

    OptimizerConfig cfg;
    cfg.seed = seed;
    Schedule base_sched;
    base_sched.batch_size = 16;
    {
      Stage s1;
      s1.kind = LossKind::Mse;
      s1.alpha = 0.01;
      s1.epochs = 9;
      base_sched.stages.push_back(s1);
      Stage s2 = s1;
      s2.alpha = 0.001;
      s2.epochs = 3;
      base_sched.stages.push_back(s2);
    }
    TrainResult base = run_schedule(init_weights(proto, seed), train, base_sched, cfg);

    Schedule robust_sched;
    robust_sched.batch_size = 16;
    {
      Stage s;
      s.kind = LossKind::Symbolic;
      s.alpha = 0.001;
      s.epochs = 4;
      s.spec = RobustSpec{Tensor({1}, delta), lt, kappa};
      s.has_spec = true;
      robust_sched.stages.push_back(s);
    }
    TrainResult robust = run_schedule(base.net, train, robust_sched, cfg);

    ComparisonReport rep = compare_models(robust.net, base.net, eval_set, atk);
    const double acc_base = band_accuracy(base.net);
    const double acc_robust = band_accuracy(robust.net);
    const bool trend = rep.frac_a_larger() > rep.frac_b_larger();
    trend_hits += trend ? 1 : 0;
    detail << "seed " << seed << ": robust_larger " << rep.frac_a_larger() << " vs mse_larger "
           << rep.frac_b_larger() << " (equal " << rep.frac_roughly_equal() << ", "
           << rep.counted() << " eligible), accuracy " << acc_base << "/" << acc_robust << "; ";
    if (std::fabs(acc_base - acc_robust) >= 0.20) {
      detail << "accuracy gap >= 20%";
      return detail.str();
    }
  }
  if (trend_hits < 3) {
    detail << "trend held on only " << trend_hits << "/4 seeds (needs >= 3)";
    return detail.str();
  }
  std::fprintf(stderr, "  [detail] %s\n", detail.str().c_str());
  return "";
}

// ---------------------------------------------------------------- criterion 9
std::string criterion_pipeline_exactness() {
  Tensor zeros({720, 1280, 1}, 0.0);
  Tensor lo = preprocess(zeros);
  if (lo.shape() != Shape{128, 320, 1}) return "preprocess output shape wrong";
  for (int64_t i = 0; i < lo.numel(); ++i)
    if (lo[i] != -1.0) return "t(0) != -1 exactly";
  Tensor full({720, 1280, 3}, 255.0);
  Tensor hi = preprocess(full);
  for (int64_t i = 0; i < hi.numel(); ++i)
    if (hi[i] != 1.0) return "t(255) != 1 exactly";

  auto mk = [](double label) {
    Sample s;
    s.label = label;
    s.shape = {1};
    s.pixels = {0.0f};
    return s;
  };
  Dataset ds = {mk(541), mk(540), mk(539), mk(740), mk(640)};
  Dataset out = duplicate_rare(ds);
  // distances 99, 100, 101, 100, 0 -> duplicates for 540, 539, 740
  if (out.size() != 8) return "duplicate_rare produced " + std::to_string(out.size()) + " != 8";
  if (out[1].label != 540 || !out[2].duplicated || out[2].label != 540)
    return "inclusive >= 100 rule broken at distance exactly 100";
  if (out[0].label != 541 || out[0].duplicated) return "sample at distance 99 must not duplicate";
  return "";
}

struct Criterion {
  int id;
  const char* title;
  std::function<std::string()> run;
};

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);  // reuse big training buffers across batches
#endif
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }

  const std::vector<Criterion> criteria = {
      {1, "clip rewriting of the tolerance error is exact (1e5 triples)",
       criterion_clip_equivalence},
      {2, "interval loss with delta=0 equals MSE (100 nets, rel 1e-9)",
       criterion_mse_specialization},
      {3, "endpoint shortcut equals the overflow oracle (1e5 triples, 1e-12)",
       criterion_endpoint_equivalence},
      {4, "symbolic loss with kappa=0 equals interval loss (50 nets, rel 1e-9)",
       criterion_kappa0_specialization},
      {5, "output bounds are sound and monotone in kappa (20 nets x 10 inputs x 3 kappas)",
       criterion_bound_soundness},
      {6, "zero symbolic loss certifies all feature perturbations (2e5 samples)",
       criterion_provable_guarantee},
      {7, "loss gradients match central differences (200+ points, rel 1e-4)",
       criterion_gradient_integrity},
      {8, "robust fine-tune needs larger FGSM epsilon on 3 of 4 seeds, similar accuracy",
       criterion_attack_trend},
      {9, "preprocess endpoints exact, rare-event duplication inclusive at 100px",
       criterion_pipeline_exactness},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string err = c.run();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (err.empty()) {
      std::printf("[PASS] criterion %d: %s (%.1fs)\n", c.id, c.title, secs);
    } else {
      std::printf("[FAIL] criterion %d: %s (%.1fs)\n       %s\n", c.id, c.title, secs,
                  err.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
