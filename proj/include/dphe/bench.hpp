#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dphe {

struct PhaseMedian {
  std::string phase;  // "encrypt", "accumulate", "decrypt_reorder"
  double median_ms = 0.0;
};

struct BenchRecord {
  std::size_t dimension = 0;
  std::size_t capacity = 0;
  int key_bits = 0;
  double sparsity = 0.0;
  std::size_t reps = 0;
  int threads = 1;
  std::vector<PhaseMedian> phases;
  std::string machine;
};

// Times a single user's encryption of a random vector with the given
// sparsity, with capacity set to the non-zero count so everything fits one
// shard. Runs one discarded warm-up, then `reps` timed repetitions and
// reports the median.
BenchRecord bench_encrypt(std::size_t dimension, double sparsity,
                          int key_bits, std::size_t reps, std::uint64_t seed,
                          int threads = 1);

// Times the full secure-averaging round, reporting per-phase medians.
// Updates hold exactly `capacity` non-zeros each (or none, with
// zero_vectors, to see the pure padding cost).
BenchRecord bench_protocol(std::size_t dimension, std::size_t num_users,
                           std::size_t capacity, int key_bits,
                           std::size_t reps, std::uint64_t seed,
                           int threads = 1, bool zero_vectors = false);

// One row per phase: D,M,bits,sparsity,phase,median_ms,reps,threads.
void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records);

}  // namespace dphe
