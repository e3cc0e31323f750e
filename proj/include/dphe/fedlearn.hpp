#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dphe/rng.hpp"

namespace dphe {

// Row-major sample matrix plus labels. Binary tasks use labels -1/+1;
// multiclass tasks use class ids 0..NC-1.
struct Dataset {
  std::size_t dimension = 0;
  std::vector<double> features;  // size() == dimension * labels.size()
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(features).subspan(i * dimension,
                                                     dimension);
  }
  void push_back(std::span<const double> x, int label);
};

// One-vs-rest linear classifier: `num_classes` weight blocks of `dimension`
// entries each, flattened class-major. Binary tasks use a single block and
// the sign of its score.
struct LinearModel {
  std::size_t dimension = 0;
  std::size_t num_classes = 1;
  std::vector<double> weights;  // dimension * num_classes

  std::span<double> block(std::size_t c) {
    return std::span<double>(weights).subspan(c * dimension, dimension);
  }
  std::span<const double> block(std::size_t c) const {
    return std::span<const double>(weights).subspan(c * dimension,
                                                    dimension);
  }
};

struct TrainConfig {
  std::size_t rounds = 10;
  std::size_t local_steps = 200;  // SGD steps per user per round
  double gamma0 = 0.1;            // learning rate at step 0
  double t0 = 100.0;              // schedule: gamma0 / (1 + t / t0)
  double lambda = 1e-3;           // elastic-net overall strength
  double l1_ratio = 0.5;          // share of lambda going to the L1 term
  double target_sparsity = 0.90;
  std::size_t num_users = 0;
  std::uint64_t seed = 0;
  bool standardize = false;  // fit on the init split, apply everywhere

  // secure-mode protocol knobs
  int key_bits = 512;
  int frac_bits = 32;
  bool allow_few_users = false;
  int threads = 1;

  void validate() const;
};

enum class TrainMode { kSecure, kPlaintext };

struct RoundMetrics {
  std::size_t round = 0;  // 0 is the init model
  double accuracy = 0.0;  // on the pooled user data
  double sparsity = 0.0;  // mean fraction of exact zeros in user updates
  double lambda = 0.0;    // strength in effect for this round's updates
  double wallclock_encrypt_ms = 0.0;
};

struct TrainResult {
  std::vector<LinearModel> models;  // one per round, index 0 = init
  std::vector<RoundMetrics> metrics;
};

struct EvalResult {
  double accuracy = 0.0;
  // Binary tasks only: average precision of the positive class.
  std::optional<double> average_precision;
};

// Zero-mean unit-variance scaling, fit once on the initialization split.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_stddev;  // 1 for constant dimensions

  static Standardizer fit(const Dataset& data);
  Dataset apply(const Dataset& data) const;
};

// Fraction of exactly-zero weights.
double sparsity(std::span<const double> weights);

// Multiplicative controller nudging the elastic-net strength toward the
// sparsity target: 20% up when under target, 20% down when more than 0.05
// above it, unchanged inside the band.
double adapt_regularization(double measured_sparsity, double target,
                            double lambda);

// `steps` SGD steps of hinge loss with elastic-net regularization. The L2
// share acts as multiplicative shrinkage inside the gradient step; the L1
// share is applied as a soft-threshold afterwards, so zeros are exact.
// `step_offset` continues the learning-rate schedule across rounds.
LinearModel local_update(const LinearModel& start, const Dataset& data,
                         const TrainConfig& config, Rng& rng,
                         std::size_t step_offset = 0);

// Plaintext SGD on the initialization split, from a zero model.
LinearModel init_model(const Dataset& init_data, const TrainConfig& config);

// The full loop: broadcast, local updates, averaging (secure protocol or
// direct mean), strength adaptation, per-round metrics.
TrainResult federated_train(const std::vector<Dataset>& user_data,
                            const Dataset& init_data,
                            const TrainConfig& config, TrainMode mode);

EvalResult evaluate(const LinearModel& model, const Dataset& data);

}  // namespace dphe
