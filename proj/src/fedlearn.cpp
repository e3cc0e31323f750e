#include "dphe/fedlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dphe/errors.hpp"
#include "dphe/protocol.hpp"
#include "dphe/sparse.hpp"
#include "dphe/transcript.hpp"

namespace dphe {

namespace {

// rng tree tags, one subtree per concern
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kLocalTag = 2;
constexpr std::uint64_t kProtocolTag = 3;

// controller constants for adapt_regularization
constexpr double kAdaptStep = 0.2;
constexpr double kAdaptBand = 0.05;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Class count implied by the labels: -1/+1 anywhere means a binary task
// with a single weight block, otherwise ids 0..max cover the classes.
std::size_t infer_classes(const Dataset& data) {
  bool binary = false;
  int max_label = 0;
  for (int y : data.labels) {
    if (y == -1) {
      binary = true;
    } else if (y < 0) {
      throw ConfigError("labels must be -1/+1 or non-negative class ids");
    }
    max_label = std::max(max_label, y);
  }
  if (binary) {
    if (max_label > 1) {
      throw ConfigError("found label -1 alongside multiclass ids");
    }
    return 1;
  }
  return static_cast<std::size_t>(max_label) + 1;
}

// The one-vs-rest target for block `c`: the sample's own class is the
// positive. Binary tasks keep their -1/+1 label as is.
int block_label(int label, std::size_t c, std::size_t num_classes) {
  if (num_classes == 1) {
    return label;
  }
  return label == static_cast<int>(c) ? 1 : -1;
}

int predict(const LinearModel& model, std::span<const double> x) {
  if (model.num_classes == 1) {
    // Sign of the score; a tie goes to the lower class id, which is -1.
    return dot(model.block(0), x) > 0.0 ? 1 : -1;
  }
  std::size_t best = 0;
  double best_score = dot(model.block(0), x);
  for (std::size_t c = 1; c < model.num_classes; ++c) {
    const double score = dot(model.block(c), x);
    if (score > best_score) {  // strict: ties keep the lower class id
      best_score = score;
      best = c;
    }
  }
  return static_cast<int>(best);
}

double average_precision(const LinearModel& model, const Dataset& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> scores(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    scores[i] = dot(model.block(0), data.sample(i));
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) {
      return scores[a] > scores[b];
    }
    return a < b;  // deterministic tie order
  });
  std::size_t positives_total = 0;
  for (int y : data.labels) {
    positives_total += (y == 1);
  }
  if (positives_total == 0) {
    return 0.0;
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (data.labels[order[rank]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(positives_total);
}

}  // namespace

void Dataset::push_back(std::span<const double> x, int label) {
  if (dimension == 0) {
    dimension = x.size();
  }
  if (x.size() != dimension) {
    throw ConfigError("sample has " + std::to_string(x.size()) +
                      " features, dataset expects " +
                      std::to_string(dimension));
  }
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

void TrainConfig::validate() const {
  if (l1_ratio < 0.0 || l1_ratio > 1.0) {
    throw ConfigError("l1_ratio must lie in [0, 1]");
  }
  if (!(target_sparsity > 0.0) || !(target_sparsity < 1.0)) {
    throw ConfigError("target_sparsity must lie in (0, 1)");
  }
  if (!(gamma0 >= 0.0) || !(t0 > 0.0)) {
    throw ConfigError("learning-rate schedule needs gamma0 >= 0 and t0 > 0");
  }
  if (lambda < 0.0) {
    throw ConfigError("regularization strength must be non-negative");
  }
}

Standardizer Standardizer::fit(const Dataset& data) {
  if (data.size() == 0) {
    throw ConfigError("cannot fit a standardizer on an empty dataset");
  }
  const std::size_t dim = data.dimension;
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.inv_stddev.assign(dim, 1.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.sample(i);
    for (std::size_t d = 0; d < dim; ++d) {
      s.mean[d] += x[d];
    }
  }
  for (double& m : s.mean) {
    m /= static_cast<double>(data.size());
  }
  std::vector<double> var(dim, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.sample(i);
    for (std::size_t d = 0; d < dim; ++d) {
      const double delta = x[d] - s.mean[d];
      var[d] += delta * delta;
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    const double stddev =
        std::sqrt(var[d] / static_cast<double>(data.size()));
    s.inv_stddev[d] = stddev > 0.0 ? 1.0 / stddev : 1.0;
  }
  return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
  if (data.dimension != mean.size()) {
    throw ConfigError("standardizer dimension mismatch");
  }
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t d = 0; d < out.dimension; ++d) {
      double& v = out.features[i * out.dimension + d];
      v = (v - mean[d]) * inv_stddev[d];
    }
  }
  return out;
}

double sparsity(std::span<const double> weights) {
  if (weights.empty()) {
    return 0.0;
  }
  const std::size_t zeros = weights.size() - nnz(weights);
  return static_cast<double>(zeros) / static_cast<double>(weights.size());
}

double adapt_regularization(double measured_sparsity, double target,
                            double lambda) {
  if (measured_sparsity < 0.0 || measured_sparsity >= 1.0) {
    throw ConfigError("measured sparsity must lie in [0, 1)");
  }
  if (measured_sparsity < target) {
    return lambda * (1.0 + kAdaptStep);
  }
  if (measured_sparsity > target + kAdaptBand) {
    return lambda * (1.0 - kAdaptStep);
  }
  return lambda;
}

LinearModel local_update(const LinearModel& start, const Dataset& data,
                         const TrainConfig& config, Rng& rng,
                         std::size_t step_offset) {
  config.validate();
  if (data.size() == 0) {
    throw ConfigError("cannot update on an empty dataset");
  }
  if (data.dimension != start.dimension) {
    throw ConfigError("dataset dimension " + std::to_string(data.dimension) +
                      " does not match model dimension " +
                      std::to_string(start.dimension));
  }

  LinearModel model = start;
  const double l1 = config.lambda * config.l1_ratio;
  const double l2 = config.lambda * (1.0 - config.l1_ratio);

  for (std::size_t k = 0; k < config.local_steps; ++k) {
    const double t = static_cast<double>(step_offset + k);
    const double gamma = config.gamma0 / (1.0 + t / config.t0);
    const std::size_t i = static_cast<std::size_t>(rng.below(data.size()));
    const auto x = data.sample(i);
    const int label = data.labels[i];

    for (std::size_t c = 0; c < model.num_classes; ++c) {
      const int y = block_label(label, c, model.num_classes);
      auto w = model.block(c);
      const double margin = static_cast<double>(y) * dot(w, x);
      // Hinge subgradient: -y*x while the margin is violated, zero once
      // y*w*x >= 1 (the boundary counts as satisfied).
      const bool active = margin < 1.0;
      const double shrink = 1.0 - gamma * l2;
      const double thresh = gamma * l1;
      for (std::size_t d = 0; d < model.dimension; ++d) {
        double v = w[d] * shrink;
        if (active) {
          v += gamma * static_cast<double>(y) * x[d];
        }
        // Soft threshold: the proximal step of the L1 term, giving exact
        // zeros instead of values that merely hover near zero.
        if (v > thresh) {
          v -= thresh;
        } else if (v < -thresh) {
          v += thresh;
        } else {
          v = 0.0;
        }
        w[d] = v;
      }
    }
  }
  return model;
}

LinearModel init_model(const Dataset& init_data, const TrainConfig& config) {
  if (init_data.size() == 0 || init_data.dimension == 0) {
    throw ConfigError("initialization split is empty");
  }
  LinearModel zero;
  zero.dimension = init_data.dimension;
  zero.num_classes = infer_classes(init_data);
  zero.weights.assign(zero.dimension * zero.num_classes, 0.0);
  Rng rng = Rng(config.seed).child(kInitTag);
  return local_update(zero, init_data, config, rng, 0);
}

EvalResult evaluate(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0) {
    throw ConfigError("cannot evaluate on an empty dataset");
  }
  if (data.dimension != model.dimension) {
    throw ConfigError("evaluation dataset dimension mismatch");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    correct += (predict(model, data.sample(i)) == data.labels[i]);
  }
  EvalResult result;
  result.accuracy =
      static_cast<double>(correct) / static_cast<double>(data.size());
  if (model.num_classes == 1) {
    result.average_precision = average_precision(model, data);
  }
  return result;
}

TrainResult federated_train(const std::vector<Dataset>& user_data,
                            const Dataset& init_data,
                            const TrainConfig& config, TrainMode mode) {
  config.validate();
  if (user_data.empty()) {
    throw ConfigError("no user datasets");
  }
  if (config.num_users != 0 && config.num_users != user_data.size()) {
    throw ConfigError("config says " + std::to_string(config.num_users) +
                      " users, got " + std::to_string(user_data.size()) +
                      " datasets");
  }
  const std::size_t num_users = user_data.size();
  if (mode == TrainMode::kSecure && num_users < 3 &&
      !config.allow_few_users) {
    throw ConfigError("secure training requires at least 3 users");
  }

  // Optional preprocessing, fit on the init split only so no user's data
  // influences another's scaling.
  Standardizer scaler;
  Dataset init_scaled = init_data;
  std::vector<Dataset> users_scaled;
  const std::vector<Dataset>* users = &user_data;
  if (config.standardize) {
    scaler = Standardizer::fit(init_data);
    init_scaled = scaler.apply(init_data);
    users_scaled.reserve(num_users);
    for (const Dataset& d : user_data) {
      users_scaled.push_back(scaler.apply(d));
    }
    users = &users_scaled;
  }

  Dataset pooled;
  pooled.dimension = (*users)[0].dimension;
  for (const Dataset& d : *users) {
    if (d.dimension != pooled.dimension) {
      throw ConfigError("user datasets disagree on dimension");
    }
    if (d.size() == 0) {
      throw ConfigError("every user needs at least one sample");
    }
    pooled.features.insert(pooled.features.end(), d.features.begin(),
                           d.features.end());
    pooled.labels.insert(pooled.labels.end(), d.labels.begin(),
                         d.labels.end());
  }

  TrainResult result;
  result.models.reserve(config.rounds + 1);
  result.models.push_back(init_model(init_scaled, config));
  const LinearModel& init = result.models.front();
  const std::size_t flat_len = init.weights.size();
  // Capacity policy: a tenth of the full flattened weight count.
  const std::size_t protocol_capacity =
      (flat_len + 9) / 10 == 0 ? 1 : (flat_len + 9) / 10;

  result.metrics.push_back(RoundMetrics{
      0, evaluate(init, pooled).accuracy, sparsity(init.weights),
      config.lambda, 0.0});

  const Rng root(config.seed);
  double lambda = config.lambda;
  for (std::size_t round = 0; round < config.rounds; ++round) {
    TrainConfig round_config = config;
    round_config.lambda = lambda;
    const LinearModel& current = result.models.back();

    std::vector<std::vector<double>> updates(num_users);
    double sparsity_sum = 0.0;
    for (std::size_t n = 0; n < num_users; ++n) {
      Rng local_rng = root.child(kLocalTag).child(round).child(n);
      LinearModel updated =
          local_update(current, (*users)[n], round_config, local_rng,
                       round * config.local_steps);
      sparsity_sum += sparsity(updated.weights);
      updates[n] = std::move(updated.weights);
    }
    const double mean_sparsity =
        sparsity_sum / static_cast<double>(num_users);

    LinearModel averaged = current;
    double encrypt_ms = 0.0;
    if (mode == TrainMode::kPlaintext) {
      std::vector<double> mean(flat_len, 0.0);
      for (const std::vector<double>& u : updates) {
        for (std::size_t i = 0; i < flat_len; ++i) {
          mean[i] += u[i];
        }
      }
      for (double& v : mean) {
        v /= static_cast<double>(num_users);
      }
      averaged.weights = std::move(mean);
    } else {
      double max_abs = 0.0;
      for (const std::vector<double>& u : updates) {
        for (double v : u) {
          max_abs = std::max(max_abs, std::fabs(v));
        }
      }
      ProtocolConfig pc;
      pc.dimension = flat_len;
      pc.num_users = num_users;
      pc.capacity = protocol_capacity;
      pc.key_bits = config.key_bits;
      pc.frac_bits = config.frac_bits;
      pc.max_magnitude = std::max(1.0, max_abs);
      pc.allow_few_users = config.allow_few_users;

      Rng protocol_rng = root.child(kProtocolTag).child(round);
      RunOptions options;
      options.threads = config.threads;
      SecureAverageResult secure =
          run_secure_average(pc, updates, protocol_rng, options);
      assert_transcript_secure(secure.transcript);
      averaged.weights = std::move(secure.average);
      encrypt_ms = secure.timings.encrypt_ms;
    }

    result.models.push_back(std::move(averaged));
    result.metrics.push_back(RoundMetrics{
        round + 1, evaluate(result.models.back(), pooled).accuracy,
        mean_sparsity, lambda, encrypt_ms});
    lambda = adapt_regularization(mean_sparsity, config.target_sparsity,
                                  lambda);
  }
  return result;
}

}  // namespace dphe
