#include "dphe/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "dphe/errors.hpp"
#include "dphe/protocol.hpp"
#include "dphe/rng.hpp"

namespace dphe {

namespace {

double median(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  if (n % 2 == 1) {
    return samples[n / 2];
  }
  return 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

// Random vector with exactly `nonzeros` non-zero entries in (-1, 1).
std::vector<double> sparse_vector(std::size_t dimension, std::size_t nonzeros,
                                  Rng& rng) {
  std::vector<std::size_t> indices(dimension);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  for (std::size_t i = dimension; i > 1; --i) {
    std::swap(indices[i - 1],
              indices[static_cast<std::size_t>(rng.below(i))]);
  }
  std::vector<double> v(dimension, 0.0);
  for (std::size_t k = 0; k < nonzeros; ++k) {
    double value = rng.real01() * 1.8 - 0.9;
    if (value == 0.0) {
      value = 0.5;
    }
    v[indices[k]] = value;
  }
  return v;
}

std::string machine_note() {
  return "hw_threads=" + std::to_string(std::thread::hardware_concurrency());
}

void require_reps(std::size_t reps) {
  if (reps < 3) {
    throw ConfigError("benchmarks need at least 3 repetitions for a median");
  }
}

}  // namespace

BenchRecord bench_encrypt(std::size_t dimension, double sparsity,
                          int key_bits, std::size_t reps, std::uint64_t seed,
                          int threads) {
  require_reps(reps);
  if (sparsity < 0.0 || sparsity >= 1.0) {
    throw ConfigError("sparsity must lie in [0, 1)");
  }
  const std::size_t nonzeros = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround((1.0 - sparsity) * static_cast<double>(dimension))));

  ProtocolConfig config;
  config.dimension = dimension;
  config.num_users = 3;
  config.capacity = nonzeros;
  config.key_bits = key_bits;

  Rng rng(seed);
  Parties parties = kg_setup(config, rng);
  const std::vector<double> w = sparse_vector(dimension, nonzeros, rng);

  std::vector<double> samples;
  samples.reserve(reps);
  for (std::size_t rep = 0; rep <= reps; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto updates =
        user_encrypt_update(parties.users[0], w, rng, threads);
    const double ms = elapsed_ms(t0);
    if (updates.size() != 1) {
      throw Error("internal: capacity = nnz must give exactly one shard");
    }
    if (rep > 0) {  // first pass warms allocators and caches
      samples.push_back(ms);
    }
  }

  BenchRecord record;
  record.dimension = dimension;
  record.capacity = nonzeros;
  record.key_bits = key_bits;
  record.sparsity = sparsity;
  record.reps = reps;
  record.threads = threads;
  record.phases = {{"encrypt", median(std::move(samples))}};
  record.machine = machine_note();
  return record;
}

BenchRecord bench_protocol(std::size_t dimension, std::size_t num_users,
                           std::size_t capacity, int key_bits,
                           std::size_t reps, std::uint64_t seed, int threads,
                           bool zero_vectors) {
  require_reps(reps);
  ProtocolConfig config;
  config.dimension = dimension;
  config.num_users = num_users;
  config.capacity = capacity;
  config.key_bits = key_bits;

  Rng rng(seed);
  std::vector<std::vector<double>> updates;
  updates.reserve(num_users);
  for (std::size_t n = 0; n < num_users; ++n) {
    updates.push_back(zero_vectors
                          ? std::vector<double>(dimension, 0.0)
                          : sparse_vector(dimension, capacity, rng));
  }

  std::vector<double> encrypt_samples;
  std::vector<double> accumulate_samples;
  std::vector<double> decrypt_samples;
  RunOptions options;
  options.threads = threads;
  for (std::size_t rep = 0; rep <= reps; ++rep) {
    Rng run_rng = rng.child(rep);
    const SecureAverageResult result =
        run_secure_average(config, updates, run_rng, options);
    if (rep == 0) {
      continue;
    }
    encrypt_samples.push_back(result.timings.encrypt_ms);
    accumulate_samples.push_back(result.timings.accumulate_ms);
    decrypt_samples.push_back(result.timings.decrypt_ms);
  }

  BenchRecord record;
  record.dimension = dimension;
  record.capacity = capacity;
  record.key_bits = key_bits;
  record.sparsity =
      zero_vectors ? 0.0
                   : 1.0 - static_cast<double>(capacity) /
                               static_cast<double>(dimension);
  record.reps = reps;
  record.threads = threads;
  record.phases = {{"encrypt", median(std::move(encrypt_samples))},
                   {"accumulate", median(std::move(accumulate_samples))},
                   {"decrypt_reorder", median(std::move(decrypt_samples))}};
  record.machine = machine_note();
  return record;
}

void write_bench_csv(std::ostream& out,
                     std::span<const BenchRecord> records) {
  out << "D,M,bits,sparsity,phase,median_ms,reps,threads\n";
  char buffer[64];
  for (const BenchRecord& record : records) {
    for (const PhaseMedian& phase : record.phases) {
      out << record.dimension << ',' << record.capacity << ','
          << record.key_bits << ',';
      std::snprintf(buffer, sizeof(buffer), "%.17g", record.sparsity);
      out << buffer << ',' << phase.phase << ',';
      std::snprintf(buffer, sizeof(buffer), "%.17g", phase.median_ms);
      out << buffer << ',' << record.reps << ',' << record.threads << '\n';
    }
  }
}

}  // namespace dphe
