#pragma once

#include <string>
#include <vector>

#include "tolnet/data.hpp"
#include "tolnet/network.hpp"
#include "tolnet/tensor.hpp"

namespace tolnet {

struct AttackConfig {
  // prediction must move at least this far (output units) to count as attacked
  double deviation_threshold = 80.0;
  // candidate step sizes, strictly increasing, all > 0 (normalized input units)
  std::vector<double> epsilon_grid;
  // |eps_a - eps_b| <= equality_band counts as "roughly equal"
  double equality_band = 0.05;
  // a clean prediction is "originally perfect" when |pred - label| <= perfect_delta
  double perfect_delta = 10.0;

  static std::vector<double> default_grid();  // 0.005 .. 0.5 step 0.005
  void validate() const;
};

// Single-step sign attack on the squared prediction-label deviation:
//   in' = clamp(in + eps * sign(d loss / d in), -1, 1),  sign(0) = 0.
Tensor fgsm_step(const Network& net, const Tensor& in, const Tensor& label, double eps);

struct MinEpsResult {
  enum class Status { Found, NotFound, Skipped };
  Status status = Status::Skipped;
  double eps = 0.0;              // meaningful only when Found
  double clean_deviation = 0.0;  // |f(in) - label| before any perturbation
};

// First grid value whose single-step perturbation moves the prediction by at
// least deviation_threshold. Skipped when the clean prediction is not
// "originally perfect". The contract is first-grid-success: single-step
// deviation need not be monotone in eps, so the search records the first
// success, not a guarantee about larger values.
MinEpsResult minimal_epsilon(const Network& net, const Tensor& in, const Tensor& label,
                             const AttackConfig& config);

enum class Bucket { ALarger, RoughlyEqual, BLarger };

struct ComparisonRow {
  std::string id;
  MinEpsResult a, b;
  Bucket bucket = Bucket::RoughlyEqual;
  bool counted = false;  // false when either model was skipped
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  int64_t a_larger = 0, roughly_equal = 0, b_larger = 0;
  int64_t skipped = 0;
  int64_t counted() const { return a_larger + roughly_equal + b_larger; }
  double frac_a_larger() const;
  double frac_roughly_equal() const;
  double frac_b_larger() const;
};

// Per eligible image (both models originally perfect), compares minimal
// epsilons. A model whose grid search never succeeds needs more than the
// grid maximum, so it buckets as "larger" against any model with a found
// value; two not-found results bucket as roughly equal.
ComparisonReport compare_models(const Network& net_a, const Network& net_b, const Dataset& eval,
                                const AttackConfig& config);

}  // namespace tolnet
