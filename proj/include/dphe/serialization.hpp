#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dphe/fedlearn.hpp"
#include "dphe/paillier.hpp"
#include "dphe/protocol.hpp"
#include "dphe/transcript.hpp"

namespace dphe {

std::string to_hex(const mpz_class& value);
mpz_class from_hex(const std::string& text);

// Key files: big integers as lowercase hex, public and private parts in
// separate files.
nlohmann::json public_key_to_json(const paillier::PublicKey& pk);
nlohmann::json private_key_to_json(const paillier::PrivateKey& sk);
paillier::PublicKey public_key_from_json(const nlohmann::json& j);
paillier::PrivateKey private_key_from_json(const nlohmann::json& j);

// Protocol config: {D, N, M, key_bits, frac_bits, max_magnitude, seed}.
// The seed is optional here; the command line may supply it instead.
struct SimulationConfig {
  ProtocolConfig protocol;
  bool has_seed = false;
  std::uint64_t seed = 0;
};
SimulationConfig simulation_config_from_json(const nlohmann::json& j);

TrainConfig train_config_from_json(const nlohmann::json& j);

// Dataset CSV: header `label,f0..f{D-1}`, one sample per row.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

// Headerless numeric matrix (the simulate command's input of one weight
// row per user).
std::vector<std::vector<double>> read_matrix_csv(const std::string& path);
void write_vector_csv(const std::string& path, std::span<const double> v);

// Per-round metrics. Wallclock is run-dependent, so it is zeroed unless
// timings are explicitly requested; everything else is seed-deterministic.
void write_metrics_csv(const std::string& path,
                       std::span<const RoundMetrics> metrics,
                       bool include_timings);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_transcript_jsonl(const std::string& path,
                            const Transcript& transcript);

}  // namespace dphe
