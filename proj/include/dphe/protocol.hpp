#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dphe/encoding.hpp"
#include "dphe/paillier.hpp"
#include "dphe/permutation.hpp"
#include "dphe/rng.hpp"
#include "dphe/transcript.hpp"

namespace dphe {

struct ProtocolConfig {
  std::size_t dimension = 0;  // length of every user's update vector
  std::size_t num_users = 0;
  std::size_t capacity = 0;   // encrypted values per update; larger
                              // supports are sharded
  int key_bits = 512;
  int frac_bits = 32;
  double max_magnitude = 1.0;  // per-coordinate bound on user values

  // Three users is the minimum for the sum to hide any one contribution
  // from the key holder; tests may drop below it explicitly.
  bool allow_few_users = false;

  // Shard indices identify which updates share an origin. Hidden from the
  // recorded messages by default so shards read like independent sources;
  // tests flip this to follow individual shards.
  bool expose_shard_ids = false;

  void validate() const;
};

// One user's encrypted contribution: `capacity` ciphertexts paired with the
// doubly permuted coordinates they belong to.
struct EncryptedUpdate {
  std::size_t user_id = 0;
  std::size_t shard_id = 0;
  std::vector<paillier::Ciphertext> enc_values;
  std::vector<std::size_t> permuted_support;
};

struct KeyGeneratorState {
  paillier::Keypair keys;
  Permutation shared_map;               // known to users, not the aggregator
  std::vector<Permutation> user_maps;   // user_maps[n] known to user n and
                                        // the aggregator
  FixedPointCodec codec;
};

struct UserState {
  std::size_t user_id = 0;
  paillier::PublicKey pk;
  Permutation shared_map;
  Permutation user_map;
  std::size_t capacity = 0;
  FixedPointCodec codec;
};

struct AggregatorState {
  paillier::PublicKey pk;
  std::vector<Permutation> user_maps;
  std::size_t capacity = 0;
  // One ciphertext slot per coordinate, in shared-map order. Every slot
  // starts as the same single encryption of zero; untouched slots still
  // hold it at the end and decrypt to exact zeros.
  std::vector<paillier::Ciphertext> accumulator;
  std::size_t updates_applied = 0;
};

struct Parties {
  KeyGeneratorState kg;
  std::vector<UserState> users;
  AggregatorState aggregator;
};

// Key holder provisions one protocol round: Paillier keypair, the shared
// permutation, one per-user permutation, and the fixed-point codec. Each
// delivery of key material is recorded in the transcript.
Parties kg_setup(const ProtocolConfig& config, Rng& rng,
                 Transcript* transcript = nullptr);

// Shards the dense vector into capacity-sized pieces, encodes and encrypts
// each piece's values, and double-permutes its support. A zero vector still
// produces one (all padding) update. `threads` caps parallel encryption.
std::vector<EncryptedUpdate> user_encrypt_update(const UserState& user,
                                                 std::span<const double> w,
                                                 Rng& rng, int threads = 1);

// Removes the sender's own permutation layer from the update's support and
// folds each ciphertext into the accumulator slot it points at. Delivery of
// the update is what the transcript records, so entries appear in delivery
// order; `expose_shard_ids` additionally logs which shard this was.
void agg_accumulate(AggregatorState& agg, const EncryptedUpdate& update,
                    Transcript* transcript = nullptr,
                    bool expose_shard_ids = false);

// Decrypts every accumulator slot, decodes to reals, and undoes the shared
// permutation, yielding the coordinate-wise sum of all accumulated updates.
std::vector<double> kg_decrypt_and_reorder(const KeyGeneratorState& kg,
                                           const AggregatorState& agg,
                                           Transcript* transcript = nullptr);

// Wallclock per protocol phase, for the timing harness.
struct PhaseTimings {
  double setup_ms = 0.0;
  double encrypt_ms = 0.0;
  double accumulate_ms = 0.0;
  double decrypt_ms = 0.0;
};

struct RunOptions {
  int threads = 1;
  // When set, encrypted updates are delivered to the aggregator in a
  // shuffled order instead of user-then-shard order. The result must not
  // depend on it.
  Rng* scheduler_rng = nullptr;
};

struct SecureAverageResult {
  std::vector<double> average;
  Transcript transcript;
  PhaseTimings timings;
};

// Full round: setup, per-user encryption, accumulation, decryption, and the
// final division by the user count in plaintext.
SecureAverageResult run_secure_average(
    const ProtocolConfig& config,
    const std::vector<std::vector<double>>& updates, Rng& rng,
    const RunOptions& options = {});

}  // namespace dphe
