#include "dphe/protocol.hpp"

#include <chrono>
#include <numeric>
#include <string>
#include <utility>

#include "dphe/errors.hpp"
#include "dphe/sparse.hpp"

namespace dphe {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

std::string user_name(std::size_t id) {
  return "user:" + std::to_string(id);
}

}  // namespace

void ProtocolConfig::validate() const {
  if (dimension == 0) {
    throw ConfigError("dimension must be positive");
  }
  if (num_users == 0) {
    throw ConfigError("user count must be positive");
  }
  if (num_users < 3 && !allow_few_users) {
    throw ConfigError(
        "fewer than 3 users lets the key holder subtract its way to an "
        "individual update; pass allow_few_users to run anyway");
  }
  if (capacity < 1 || capacity > dimension) {
    throw ConfigError("capacity must lie in [1, dimension]");
  }
  if (key_bits < 16) {
    throw ConfigError("key size is too small to hold any encoded value");
  }
  if (!(max_magnitude > 0.0)) {
    throw ConfigError("max_magnitude must be positive");
  }
}

Parties kg_setup(const ProtocolConfig& config, Rng& rng,
                 Transcript* transcript) {
  config.validate();
  const std::size_t dim = config.dimension;

  paillier::Keypair keys = paillier::keygen(config.key_bits, rng);
  Permutation shared = random_permutation(dim, rng);
  std::vector<Permutation> user_maps;
  user_maps.reserve(config.num_users);
  for (std::size_t n = 0; n < config.num_users; ++n) {
    user_maps.push_back(random_permutation(dim, rng));
  }

  // Worst case per accumulator slot: every shard of every user lands one
  // value there, each bounded by max_magnitude.
  const long shards_per_user =
      static_cast<long>((dim + config.capacity - 1) / config.capacity);
  const long max_terms = static_cast<long>(config.num_users) * shards_per_user;
  FixedPointCodec codec(config.frac_bits, keys.pub.n, max_terms,
                        config.max_magnitude);

  Parties parties{
      KeyGeneratorState{keys, shared, user_maps, codec},
      {},
      AggregatorState{keys.pub, user_maps, config.capacity, {}, 0},
  };
  parties.users.reserve(config.num_users);
  for (std::size_t n = 0; n < config.num_users; ++n) {
    parties.users.push_back(UserState{n, keys.pub, shared, user_maps[n],
                                      config.capacity, codec});
    if (transcript != nullptr) {
      transcript->record("keygen", user_name(n), "key_material",
                         {{"public_key", true},
                          {"private_key", false},
                          {"us_permutation", true},
                          {"ua_permutations", 1},
                          {"capacity", config.capacity}});
    }
  }

  // The aggregator encrypts one zero itself and pads the whole accumulator
  // with it; untouched slots decrypt to exact zeros.
  Rng agg_rng = rng.child(0x61676730);  // "agg0"
  const paillier::Ciphertext enc_zero = paillier::enc_zero(keys.pub, agg_rng);
  parties.aggregator.accumulator.assign(dim, enc_zero);
  if (transcript != nullptr) {
    transcript->record("keygen", "aggregator", "key_material",
                       {{"public_key", true},
                        {"private_key", false},
                        {"us_permutation", false},
                        {"ua_permutations", config.num_users},
                        {"capacity", config.capacity}});
  }
  return parties;
}

std::vector<EncryptedUpdate> user_encrypt_update(const UserState& user,
                                                 std::span<const double> w,
                                                 Rng& rng, int threads) {
  const std::size_t dim = user.shared_map.size();
  if (w.size() != dim) {
    throw ConfigError("update has " + std::to_string(w.size()) +
                      " coordinates, expected " + std::to_string(dim));
  }

  std::vector<SparseDecomposition> shards = shard(w, user.capacity);
  if (shards.empty()) {
    // All-zero vector: send one padding-only shard so this user's round
    // trip looks like everyone else's.
    std::vector<double> zeros(dim, 0.0);
    shards.push_back(decompose(zeros, user.capacity));
  }

  std::vector<EncryptedUpdate> updates;
  updates.reserve(shards.size());
  for (std::size_t s = 0; s < shards.size(); ++s) {
    const SparseDecomposition& piece = shards[s];
    std::vector<mpz_class> encoded(piece.values.size());
    for (std::size_t m = 0; m < piece.values.size(); ++m) {
      encoded[m] = user.codec.encode(piece.values[m]);
    }
    EncryptedUpdate update;
    update.user_id = user.user_id;
    update.shard_id = s;
    update.enc_values =
        paillier::encrypt_many(user.pk, encoded, rng, threads);
    update.permuted_support =
        double_permute(piece.support, user.shared_map, user.user_map);
    updates.push_back(std::move(update));
  }
  return updates;
}

void agg_accumulate(AggregatorState& agg, const EncryptedUpdate& update,
                    Transcript* transcript, bool expose_shard_ids) {
  if (update.user_id >= agg.user_maps.size()) {
    throw ConfigError("update from unknown user " +
                      std::to_string(update.user_id));
  }
  if (update.enc_values.size() != agg.capacity ||
      update.permuted_support.size() != agg.capacity) {
    throw ConfigError("update must carry exactly " +
                      std::to_string(agg.capacity) +
                      " ciphertext/support pairs");
  }

  const std::vector<std::size_t> positions =
      partial_reorder(update.permuted_support, agg.user_maps[update.user_id]);
  std::vector<bool> seen(agg.accumulator.size(), false);
  for (std::size_t pos : positions) {
    if (pos >= agg.accumulator.size()) {
      throw ConfigError("support index " + std::to_string(pos) +
                        " outside accumulator of length " +
                        std::to_string(agg.accumulator.size()));
    }
    if (seen[pos]) {
      throw ConfigError("update support contains duplicate indices");
    }
    seen[pos] = true;
  }

  for (std::size_t m = 0; m < agg.capacity; ++m) {
    paillier::Ciphertext& slot = agg.accumulator[positions[m]];
    slot = paillier::add(agg.pk, slot, update.enc_values[m]);
  }
  ++agg.updates_applied;

  if (transcript != nullptr) {
    nlohmann::json payload{{"user", update.user_id},
                           {"ciphertext_count", update.enc_values.size()},
                           {"support", update.permuted_support},
                           {"support_permutations", 2}};
    if (expose_shard_ids) {
      payload["shard"] = update.shard_id;
    }
    transcript->record(user_name(update.user_id), "aggregator",
                       "encrypted_update", std::move(payload));
  }
}

std::vector<double> kg_decrypt_and_reorder(const KeyGeneratorState& kg,
                                           const AggregatorState& agg,
                                           Transcript* transcript) {
  const std::size_t dim = kg.shared_map.size();
  if (agg.accumulator.size() != dim) {
    throw ConfigError("accumulator length " +
                      std::to_string(agg.accumulator.size()) +
                      " does not match dimension " + std::to_string(dim));
  }
  if (transcript != nullptr) {
    transcript->record("aggregator", "keygen", "decrypt_request",
                       {{"target", "aggregate"}, {"length", dim}});
  }

  std::vector<double> shuffled(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const mpz_class plain =
        paillier::decrypt(kg.keys.priv, kg.keys.pub, agg.accumulator[j]);
    shuffled[j] = kg.codec.decode(plain);
  }
  std::vector<double> w_sum =
      kg.shared_map.inverse().apply_vec(std::span<const double>(shuffled));

  if (transcript != nullptr) {
    transcript->record("keygen", "aggregator", "decrypt_response",
                       {{"target", "aggregate"}, {"length", dim}});
  }
  return w_sum;
}

SecureAverageResult run_secure_average(
    const ProtocolConfig& config,
    const std::vector<std::vector<double>>& updates, Rng& rng,
    const RunOptions& options) {
  if (updates.size() != config.num_users) {
    throw ConfigError("expected one update per user (" +
                      std::to_string(config.num_users) + "), got " +
                      std::to_string(updates.size()));
  }
  for (const std::vector<double>& w : updates) {
    if (w.size() != config.dimension) {
      throw ConfigError("every update must have " +
                        std::to_string(config.dimension) + " coordinates");
    }
  }

  SecureAverageResult result;
  auto t0 = std::chrono::steady_clock::now();
  Parties parties = kg_setup(config, rng, &result.transcript);
  result.timings.setup_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<EncryptedUpdate> pending;
  for (std::size_t n = 0; n < config.num_users; ++n) {
    std::vector<EncryptedUpdate> mine = user_encrypt_update(
        parties.users[n], updates[n], rng, options.threads);
    for (EncryptedUpdate& u : mine) {
      pending.push_back(std::move(u));
    }
  }
  result.timings.encrypt_ms = elapsed_ms(t0);

  // Delivery order is user-then-shard unless a scheduler shuffles it; the
  // sum is the same either way because ciphertext addition commutes.
  std::vector<std::size_t> order(pending.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.scheduler_rng != nullptr) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(options.scheduler_rng->below(i));
      std::swap(order[i - 1], order[j]);
    }
  }

  t0 = std::chrono::steady_clock::now();
  for (std::size_t idx : order) {
    agg_accumulate(parties.aggregator, pending[idx], &result.transcript,
                   config.expose_shard_ids);
  }
  result.timings.accumulate_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<double> w_sum =
      kg_decrypt_and_reorder(parties.kg, parties.aggregator,
                             &result.transcript);
  result.timings.decrypt_ms = elapsed_ms(t0);

  result.average.resize(config.dimension);
  for (std::size_t i = 0; i < config.dimension; ++i) {
    result.average[i] = w_sum[i] / static_cast<double>(config.num_users);
  }
  return result;
}

}  // namespace dphe
