#include <doctest.h>

#include <algorithm>
#include <vector>

#include "dphe/errors.hpp"
#include "dphe/paillier.hpp"
#include "dphe/protocol.hpp"
#include "dphe/rng.hpp"
#include "dphe/transcript.hpp"

using namespace dphe;

namespace {

ProtocolConfig small_config() {
  ProtocolConfig config;
  config.dimension = 4;
  config.num_users = 3;
  config.capacity = 2;
  config.key_bits = 128;  // test-size keys keep this suite fast
  config.frac_bits = 32;
  config.max_magnitude = 4.0;
  return config;
}

// Undoes the full pipeline with the key holder's private state: decrypt
// every ciphertext, decode, and strip both permutation layers. Summing the
// resulting dense shards must give back the exact input vector.
std::vector<double> openly_decode(const KeyGeneratorState& kg,
                                  const Permutation& user_map,
                                  const std::vector<EncryptedUpdate>& updates,
                                  std::size_t dim) {
  std::vector<double> total(dim, 0.0);
  for (const EncryptedUpdate& u : updates) {
    const auto once = partial_reorder(u.permuted_support, user_map);
    const auto original = kg.shared_map.inverse().apply_support(once);
    for (std::size_t m = 0; m < original.size(); ++m) {
      const mpz_class plain =
          paillier::decrypt(kg.keys.priv, kg.keys.pub, u.enc_values[m]);
      total[original[m]] += kg.codec.decode(plain);
    }
  }
  return total;
}

std::vector<std::size_t> delivery_order(const Transcript& t) {
  std::vector<std::size_t> users;
  for (const auto& e : t.entries()) {
    if (e.kind == "encrypted_update") {
      users.push_back(e.payload.at("user").get<std::size_t>());
    }
  }
  return users;
}

}  // namespace

TEST_SUITE_BEGIN("protocol");

TEST_CASE("config validation catches every bad field") {
  ProtocolConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.dimension = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.num_users = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.capacity = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.capacity = 5;  // dimension is 4
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.key_bits = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.max_magnitude = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("fewer than three users needs an explicit override") {
  ProtocolConfig c = small_config();
  c.num_users = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.allow_few_users = true;
  CHECK_NOTHROW(c.validate());
  c.num_users = 1;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("setup provisions consistent party state") {
  const ProtocolConfig config = small_config();
  Rng rng(61);
  Transcript transcript;
  const Parties parties = kg_setup(config, rng, &transcript);

  REQUIRE(parties.users.size() == 3);
  CHECK(parties.kg.user_maps.size() == 3);
  CHECK(parties.kg.shared_map.size() == 4);
  // ceil(4 / 2) shards per user times 3 users bounds the slot sums
  CHECK(parties.kg.codec.max_terms() == 6);

  for (std::size_t n = 0; n < 3; ++n) {
    const UserState& u = parties.users[n];
    CHECK(u.user_id == n);
    CHECK(u.pk.n == parties.kg.keys.pub.n);
    CHECK(u.shared_map == parties.kg.shared_map);
    CHECK(u.user_map == parties.kg.user_maps[n]);
    CHECK(u.capacity == 2);
  }
  CHECK(parties.aggregator.user_maps.size() == 3);
  CHECK(parties.aggregator.updates_applied == 0);

  // one zero ciphertext, copied into every slot
  REQUIRE(parties.aggregator.accumulator.size() == 4);
  for (const auto& slot : parties.aggregator.accumulator) {
    CHECK(slot.value == parties.aggregator.accumulator[0].value);
    CHECK(paillier::decrypt(parties.kg.keys.priv, parties.kg.keys.pub,
                            slot) == 0);
  }

  // key deliveries: one per user plus one for the aggregator, all clean
  CHECK(transcript.size() == 4);
  CHECK(check_transcript(transcript).ok);
}

TEST_CASE("setup is deterministic under the seed") {
  const ProtocolConfig config = small_config();
  Rng a(62), b(62);
  const Parties pa = kg_setup(config, a);
  const Parties pb = kg_setup(config, b);
  CHECK(pa.kg.keys.pub.n == pb.kg.keys.pub.n);
  CHECK(pa.kg.shared_map == pb.kg.shared_map);
  CHECK(pa.kg.user_maps[2] == pb.kg.user_maps[2]);
  CHECK(pa.aggregator.accumulator[0].value ==
        pb.aggregator.accumulator[0].value);
}

TEST_CASE("encrypted updates open back to the original vector") {
  const ProtocolConfig config = small_config();
  Rng rng(63);
  const Parties parties = kg_setup(config, rng);
  // three nonzeros with capacity 2: expect two shards
  const std::vector<double> w{1.5, 0.0, -2.25, 0.5};
  const auto updates = user_encrypt_update(parties.users[1], w, rng);
  REQUIRE(updates.size() == 2);
  for (const auto& u : updates) {
    CHECK(u.user_id == 1);
    CHECK(u.enc_values.size() == 2);
    CHECK(u.permuted_support.size() == 2);
  }
  CHECK(updates[0].shard_id == 0);
  CHECK(updates[1].shard_id == 1);
  CHECK(openly_decode(parties.kg, parties.kg.user_maps[1], updates, 4) == w);
}

TEST_CASE("a zero vector still produces one padded update") {
  const ProtocolConfig config = small_config();
  Rng rng(64);
  const Parties parties = kg_setup(config, rng);
  const std::vector<double> zeros(4, 0.0);
  const auto updates = user_encrypt_update(parties.users[0], zeros, rng);
  REQUIRE(updates.size() == 1);
  CHECK(updates[0].enc_values.size() == 2);
  CHECK(openly_decode(parties.kg, parties.kg.user_maps[0], updates, 4) ==
        zeros);
}

TEST_CASE("updates of the wrong dimension are rejected") {
  const ProtocolConfig config = small_config();
  Rng rng(65);
  const Parties parties = kg_setup(config, rng);
  const std::vector<double> wrong(5, 1.0);
  CHECK_THROWS_AS(
      (void)user_encrypt_update(parties.users[0], wrong, rng),
      ConfigError);
}

TEST_CASE("accumulation rejects malformed updates") {
  const ProtocolConfig config = small_config();
  Rng rng(66);
  Parties parties = kg_setup(config, rng);
  const std::vector<double> w{1.0, 0.0, 0.0, 0.0};
  auto updates = user_encrypt_update(parties.users[0], w, rng);
  REQUIRE(updates.size() == 1);

  EncryptedUpdate unknown = updates[0];
  unknown.user_id = 99;
  CHECK_THROWS_AS(agg_accumulate(parties.aggregator, unknown), ConfigError);

  EncryptedUpdate short_update = updates[0];
  short_update.enc_values.pop_back();
  CHECK_THROWS_AS(agg_accumulate(parties.aggregator, short_update),
                  ConfigError);

  EncryptedUpdate duplicated = updates[0];
  duplicated.permuted_support[1] = duplicated.permuted_support[0];
  CHECK_THROWS_AS(agg_accumulate(parties.aggregator, duplicated),
                  ConfigError);

  // nothing was folded in by the failed attempts
  CHECK(parties.aggregator.updates_applied == 0);
  CHECK_NOTHROW(agg_accumulate(parties.aggregator, updates[0]));
  CHECK(parties.aggregator.updates_applied == 1);
}

TEST_CASE("accumulation order does not change a single slot bit") {
  const ProtocolConfig config = small_config();
  Rng rng(67);
  Parties parties = kg_setup(config, rng);
  std::vector<EncryptedUpdate> all;
  const std::vector<std::vector<double>> ws{
      {1.0, 2.0, 0.0, -1.0}, {0.5, 0.0, 3.0, 0.0}, {0.0, -2.5, 0.25, 1.0}};
  for (std::size_t n = 0; n < 3; ++n) {
    for (auto& u : user_encrypt_update(parties.users[n], ws[n], rng)) {
      all.push_back(std::move(u));
    }
  }

  AggregatorState forward = parties.aggregator;
  AggregatorState backward = parties.aggregator;
  for (const auto& u : all) agg_accumulate(forward, u);
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    agg_accumulate(backward, *it);
  }
  REQUIRE(forward.accumulator.size() == backward.accumulator.size());
  for (std::size_t i = 0; i < forward.accumulator.size(); ++i) {
    CHECK(forward.accumulator[i].value == backward.accumulator[i].value);
  }
}

TEST_CASE("single-user roundtrip recovers the vector exactly") {
  ProtocolConfig config = small_config();
  config.num_users = 1;
  config.allow_few_users = true;
  Rng rng(68);
  const auto result =
      run_secure_average(config, {{1.0, 0.0, 0.0, 0.0}}, rng);
  CHECK(result.average == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("three users averaging one-hot vectors") {
  const ProtocolConfig config = small_config();
  Rng rng(69);
  const std::vector<std::vector<double>> updates{
      {1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, {1.0, 1.0, 0.0, 0.0}};
  const auto result = run_secure_average(config, updates, rng);
  // sums decode to exactly 2.0; only then is each divided by 3
  CHECK(result.average[0] == 2.0 / 3.0);
  CHECK(result.average[1] == 2.0 / 3.0);
  CHECK(result.average[2] == 0.0);
  CHECK(result.average[3] == 0.0);
  CHECK(check_transcript(result.transcript).ok);
}

TEST_CASE("untouched accumulator slots decode to exact zeros") {
  ProtocolConfig config;
  config.dimension = 6;
  config.num_users = 3;
  config.capacity = 1;
  config.key_bits = 128;
  Rng rng(70);
  // every user touches only coordinate 2, so five slots keep the shared
  // zero ciphertext from setup
  std::vector<std::vector<double>> updates(
      3, std::vector<double>{0.0, 0.0, 0.5, 0.0, 0.0, 0.0});
  const auto result = run_secure_average(config, updates, rng);
  CHECK(result.average ==
        std::vector<double>{0.0, 0.0, 0.5, 0.0, 0.0, 0.0});
}

TEST_CASE("all-zero inputs average to exact zero") {
  const ProtocolConfig config = small_config();
  Rng rng(71);
  const std::vector<std::vector<double>> updates(3,
                                                 std::vector<double>(4, 0.0));
  const auto result = run_secure_average(config, updates, rng);
  CHECK(result.average == std::vector<double>(4, 0.0));
  // zero vectors still send one shard each
  CHECK(delivery_order(result.transcript).size() == 3);
}

TEST_CASE("the full run is deterministic under the seed") {
  const ProtocolConfig config = small_config();
  const std::vector<std::vector<double>> updates{
      {0.125, 0.0, 1.0, 0.0}, {0.0, 0.25, 0.0, -1.0}, {2.0, 0.0, 0.0, 0.5}};
  Rng a(72), b(72);
  const auto ra = run_secure_average(config, updates, a);
  const auto rb = run_secure_average(config, updates, b);
  CHECK(ra.average == rb.average);
  CHECK(ra.transcript.size() == rb.transcript.size());
}

TEST_CASE("a shuffled delivery schedule leaves the average untouched") {
  ProtocolConfig config = small_config();
  config.dimension = 8;
  config.capacity = 2;
  // shard counts 2 + 1 + 2: five deliveries to reorder
  const std::vector<std::vector<double>> updates{
      {1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0},
      {0.0, 0.0, 0.0, 1.5, 2.5, 0.0, 0.0, 0.0},
      {0.5, 0.0, 0.0, 0.0, 0.0, 0.25, 0.75, 0.0}};

  Rng plain_rng(73);
  const auto in_order = run_secure_average(config, updates, plain_rng);

  Rng shuffled_rng(73);
  Rng scheduler(99);
  RunOptions options;
  options.scheduler_rng = &scheduler;
  const auto shuffled =
      run_secure_average(config, updates, shuffled_rng, options);

  CHECK(shuffled.average == in_order.average);
  CHECK(shuffled.transcript.size() == in_order.transcript.size());
  // the schedule really did change the delivery sequence
  CHECK(delivery_order(shuffled.transcript) !=
        delivery_order(in_order.transcript));
}

TEST_CASE("transcript records the full message flow and stays clean") {
  ProtocolConfig config = small_config();
  Rng rng(74);
  const std::vector<std::vector<double>> updates{
      {1.0, 1.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 2.0}, {0.0, 0.5, 0.0, 0.0}};
  const auto result = run_secure_average(config, updates, rng);

  std::size_t key_material = 0, encrypted = 0, requests = 0, responses = 0;
  for (const auto& e : result.transcript.entries()) {
    if (e.kind == "key_material") ++key_material;
    if (e.kind == "encrypted_update") ++encrypted;
    if (e.kind == "decrypt_request") ++requests;
    if (e.kind == "decrypt_response") ++responses;
    CHECK(!e.payload.contains("shard"));  // hidden unless exposed
  }
  CHECK(key_material == 4);  // three users + aggregator
  CHECK(encrypted == 4);     // 2 + 1 + 1 shards
  CHECK(requests == 1);
  CHECK(responses == 1);
  CHECK(result.transcript.size() == key_material + encrypted + 2);
  CHECK_NOTHROW(assert_transcript_secure(result.transcript));
}

TEST_CASE("shard ids appear in the transcript only when exposed") {
  ProtocolConfig config = small_config();
  config.expose_shard_ids = true;
  Rng rng(75);
  const std::vector<std::vector<double>> updates{
      {1.0, 1.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 2.0}, {0.0, 0.5, 0.0, 0.0}};
  const auto result = run_secure_average(config, updates, rng);
  std::size_t with_shard = 0;
  for (const auto& e : result.transcript.entries()) {
    if (e.kind == "encrypted_update") {
      REQUIRE(e.payload.contains("shard"));
      ++with_shard;
    }
  }
  CHECK(with_shard == 4);
}

TEST_CASE("run_secure_average validates its inputs") {
  const ProtocolConfig config = small_config();
  Rng rng(76);
  const std::vector<std::vector<double>> too_few{{1.0, 0.0, 0.0, 0.0}};
  CHECK_THROWS_AS((void)run_secure_average(config, too_few, rng),
                  ConfigError);
  const std::vector<std::vector<double>> bad_width{
      {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  CHECK_THROWS_AS((void)run_secure_average(config, bad_width, rng),
                  ConfigError);
}

TEST_SUITE_END();
