// Command-line front end: key generation, protocol simulation, federated
// training, leakage-attack demos, and timing benchmarks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dphe/attack.hpp"
#include "dphe/bench.hpp"
#include "dphe/errors.hpp"
#include "dphe/fedlearn.hpp"
#include "dphe/paillier.hpp"
#include "dphe/protocol.hpp"
#include "dphe/rng.hpp"
#include "dphe/serialization.hpp"
#include "dphe/synthetic.hpp"
#include "dphe/transcript.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSecurity = 3;

// DPHE_THREADS is a hard cap on worker threads, whatever the flags say.
int resolve_threads(int requested) {
  int cap = requested;
  if (const char* env = std::getenv("DPHE_THREADS")) {
    try {
      cap = std::min(cap, std::max(1, std::stoi(env)));
    } catch (const std::exception&) {
      throw dphe::ConfigError("DPHE_THREADS must be an integer");
    }
  }
  return std::max(1, cap);
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag_seed,
                           bool config_has_seed, std::uint64_t config_seed,
                           const std::string& command) {
  if (flag_seed.has_value()) {
    return *flag_seed;
  }
  if (config_has_seed) {
    return config_seed;
  }
  throw dphe::ConfigError(command +
                          " needs a seed: pass --seed or put one in the "
                          "config file");
}

int run_keygen(int bits, const std::string& out_public,
               const std::string& out_private, std::uint64_t seed) {
  dphe::Rng rng(seed);
  const dphe::paillier::Keypair keys = dphe::paillier::keygen(bits, rng);
  dphe::write_json_file(out_public, dphe::public_key_to_json(keys.pub));
  dphe::write_json_file(out_private, dphe::private_key_to_json(keys.priv));
  std::cout << "wrote " << out_public << " and " << out_private << " ("
            << bits << "-bit modulus)\n";
  return kExitOk;
}

int run_simulate(const std::string& config_path,
                 const std::string& weights_path, const std::string& out_dir,
                 const std::optional<std::uint64_t>& seed_flag,
                 int threads) {
  const dphe::SimulationConfig sim =
      dphe::simulation_config_from_json(dphe::read_json_file(config_path));
  const std::uint64_t seed =
      require_seed(seed_flag, sim.has_seed, sim.seed, "simulate");

  const std::vector<std::vector<double>> rows =
      dphe::read_matrix_csv(weights_path);
  if (rows.size() != sim.protocol.num_users) {
    throw dphe::ConfigError("config expects " +
                            std::to_string(sim.protocol.num_users) +
                            " users but the weights file has " +
                            std::to_string(rows.size()) + " rows");
  }
  if (rows.front().size() != sim.protocol.dimension) {
    throw dphe::ConfigError("config dimension " +
                            std::to_string(sim.protocol.dimension) +
                            " does not match weight rows of length " +
                            std::to_string(rows.front().size()));
  }

  dphe::Rng rng(seed);
  dphe::RunOptions options;
  options.threads = threads;
  const dphe::SecureAverageResult result =
      dphe::run_secure_average(sim.protocol, rows, rng, options);

  std::filesystem::create_directories(out_dir);
  const auto out = std::filesystem::path(out_dir);
  dphe::write_vector_csv((out / "average.csv").string(), result.average);
  dphe::write_transcript_jsonl((out / "transcript.jsonl").string(),
                               result.transcript);
  dphe::assert_transcript_secure(result.transcript);
  std::cout << "averaged " << sim.protocol.num_users << " updates over "
            << sim.protocol.dimension << " coordinates; transcript clean\n";
  return kExitOk;
}

int run_train(const std::string& data_dir, const std::string& config_path,
              const std::string& mode_name, const std::string& out_path,
              const std::optional<std::uint64_t>& seed_flag, bool timings,
              int threads) {
  const nlohmann::json config_json = dphe::read_json_file(config_path);
  dphe::TrainConfig config = dphe::train_config_from_json(config_json);
  config.seed = require_seed(seed_flag, config_json.contains("seed"),
                             config.seed, "train");
  config.threads = threads;

  const auto dir = std::filesystem::path(data_dir);
  const dphe::Dataset init_data =
      dphe::read_dataset_csv((dir / "init.csv").string());
  std::vector<dphe::Dataset> user_data;
  if (config.num_users > 0) {
    for (std::size_t n = 0; n < config.num_users; ++n) {
      user_data.push_back(dphe::read_dataset_csv(
          (dir / ("user" + std::to_string(n) + ".csv")).string()));
    }
  } else {
    for (std::size_t n = 0;; ++n) {
      const auto path = dir / ("user" + std::to_string(n) + ".csv");
      if (!std::filesystem::exists(path)) {
        break;
      }
      user_data.push_back(dphe::read_dataset_csv(path.string()));
    }
    if (user_data.empty()) {
      throw dphe::ConfigError("no user*.csv files in " + data_dir);
    }
  }

  const dphe::TrainMode mode = mode_name == "secure"
                                   ? dphe::TrainMode::kSecure
                                   : dphe::TrainMode::kPlaintext;
  const dphe::TrainResult result =
      dphe::federated_train(user_data, init_data, config, mode);
  dphe::write_metrics_csv(out_path, result.metrics, timings);
  const dphe::RoundMetrics& last = result.metrics.back();
  std::cout << "trained " << config.rounds << " rounds (" << mode_name
            << "); final accuracy " << last.accuracy << ", sparsity "
            << last.sparsity << "; metrics in " << out_path << "\n";
  return kExitOk;
}

int run_attack(const std::string& loss, const std::string& data_path,
               const std::string& out_path, std::uint64_t seed, double gamma,
               double lambda, const std::string& regularizer, int key_bits,
               bool skip_secure) {
  dphe::AttackDemoConfig config;
  config.loss = loss;
  config.gamma = gamma;
  config.lambda = lambda;
  config.regularizer = regularizer == "l2"
                           ? dphe::RegularizerKind::kL2
                           : dphe::RegularizerKind::kNone;
  config.seed = seed;
  config.key_bits = key_bits;
  config.run_secure_counterpart = !skip_secure;

  const dphe::Dataset data = dphe::read_dataset_csv(data_path);
  const dphe::AttackReport report = dphe::attack_report(data, config);
  dphe::write_json_file(out_path, dphe::to_json(report));
  std::cout << loss << " attack: " << report.verdict;
  if (!report.margin_satisfied) {
    std::cout << " (linf error " << report.linf_error << ")";
  }
  std::cout << "; report in " << out_path << "\n";
  return kExitOk;
}

int run_bench(const std::vector<std::size_t>& dims,
              const std::vector<double>& sparsities, int bits,
              std::size_t reps, const std::string& out_path,
              std::uint64_t seed, int threads) {
  std::vector<dphe::BenchRecord> records;
  for (std::size_t dim : dims) {
    for (double sparsity : sparsities) {
      std::cerr << "benchmarking D=" << dim << " sparsity=" << sparsity
                << " bits=" << bits << "...\n";
      records.push_back(
          dphe::bench_encrypt(dim, sparsity, bits, reps, seed, threads));
    }
  }
  std::ofstream out(out_path);
  if (!out) {
    throw dphe::IoError("cannot open " + out_path + " for writing");
  }
  dphe::write_bench_csv(out, records);
  std::cout << "wrote " << records.size() << " bench records to " << out_path
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure sparse-vector aggregation: Paillier summation with "
               "doubly permuted supports, a federated trainer, leakage "
               "demos, and benchmarks"};
  app.require_subcommand(1);

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Generate a Paillier keypair");
  int kg_bits = 512;
  std::string kg_public = "public.json";
  std::string kg_private = "private.json";
  std::uint64_t kg_seed = 0;
  keygen->add_option("--bits", kg_bits, "Modulus size in bits")
      ->check(CLI::Range(16, 8192));
  keygen->add_option("--out-public", kg_public, "Public key file");
  keygen->add_option("--out-private", kg_private, "Private key file");
  keygen->add_option("--seed", kg_seed, "Deterministic generator seed")
      ->required();

  // simulate
  auto* simulate =
      app.add_subcommand("simulate", "One secure-averaging round over a "
                                     "weights CSV");
  std::string sim_config;
  std::string sim_weights;
  std::string sim_out = "simulate-out";
  std::optional<std::uint64_t> sim_seed;
  int sim_threads = 1;
  simulate->add_option("--config", sim_config,
                       "Protocol config JSON {D,N,M,key_bits,frac_bits,"
                       "max_magnitude,seed}")
      ->required();
  simulate->add_option("--weights-csv", sim_weights,
                       "Headerless CSV, one weight row per user")
      ->required();
  simulate->add_option("--out", sim_out,
                       "Output directory (average.csv, transcript.jsonl)");
  simulate->add_option("--seed", sim_seed, "Seed (overrides config)");
  simulate->add_option("--threads", sim_threads, "Worker threads")
      ->check(CLI::PositiveNumber);

  // train
  auto* train = app.add_subcommand(
      "train", "Federated training of a sparse linear classifier");
  std::string tr_data_dir;
  std::string tr_config;
  std::string tr_mode = "secure";
  std::string tr_out = "metrics.csv";
  std::optional<std::uint64_t> tr_seed;
  bool tr_timings = false;
  int tr_threads = 1;
  train->add_option("--data-dir", tr_data_dir,
                    "Directory with init.csv and user<N>.csv files")
      ->required();
  train->add_option("--config", tr_config, "Training config JSON")
      ->required();
  train->add_option("--mode", tr_mode, "Averaging mode")
      ->check(CLI::IsMember({"secure", "plaintext"}));
  train->add_option("--out", tr_out, "Metrics CSV path");
  train->add_option("--seed", tr_seed, "Seed (overrides config)");
  train->add_flag("--timings", tr_timings,
                  "Record wallclock in the metrics CSV (breaks "
                  "byte-for-byte reproducibility)");
  train->add_option("--threads", tr_threads, "Worker threads")
      ->check(CLI::PositiveNumber);

  // attack
  auto* attack = app.add_subcommand(
      "attack", "Invert a leaked plaintext SGD step back to its sample");
  std::string at_loss = "hinge";
  std::string at_data;
  std::string at_out = "attack-report.json";
  std::uint64_t at_seed = 0;
  double at_gamma = 0.125;
  double at_lambda = 0.0;
  std::string at_reg = "none";
  int at_bits = 512;
  bool at_skip_secure = false;
  attack->add_option("--loss", at_loss, "Loss whose step leaked")
      ->check(CLI::IsMember({"hinge", "logistic"}));
  attack->add_option("--data", at_data, "Dataset CSV (binary labels)")
      ->required();
  attack->add_option("--out", at_out, "Report JSON path");
  attack->add_option("--seed", at_seed, "Seed picking the probed sample");
  attack->add_option("--gamma", at_gamma, "Learning rate of the leaked step")
      ->check(CLI::PositiveNumber);
  attack->add_option("--lambda", at_lambda, "Regularization strength");
  attack->add_option("--regularizer", at_reg, "Regularizer of the step")
      ->check(CLI::IsMember({"none", "l2"}));
  attack->add_option("--key-bits", at_bits,
                     "Key size for the secure counterpart");
  attack->add_flag("--no-secure", at_skip_secure,
                   "Skip the secure-protocol counterpart run");

  // bench
  auto* bench =
      app.add_subcommand("bench", "Time encryption across sparsity levels");
  std::vector<std::size_t> be_dims;
  std::vector<double> be_sparsities{0.0, 0.95};
  int be_bits = 512;
  std::size_t be_reps = 5;
  std::string be_out = "bench.csv";
  std::uint64_t be_seed = 0;
  int be_threads = 1;
  bench->add_option("--dims", be_dims, "Vector dimensions to bench")
      ->required();
  bench->add_option("--sparsity", be_sparsities,
                    "Sparsity levels (fraction of zeros)");
  bench->add_option("--bits", be_bits, "Key size in bits");
  bench->add_option("--reps", be_reps, "Timed repetitions (>= 3)");
  bench->add_option("--out", be_out, "Bench CSV path");
  bench->add_option("--seed", be_seed, "Input-generation seed");
  bench->add_option("--threads", be_threads, "Worker threads")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*keygen) {
      return run_keygen(kg_bits, kg_public, kg_private, kg_seed);
    }
    if (*simulate) {
      return run_simulate(sim_config, sim_weights, sim_out, sim_seed,
                          resolve_threads(sim_threads));
    }
    if (*train) {
      return run_train(tr_data_dir, tr_config, tr_mode, tr_out, tr_seed,
                       tr_timings, resolve_threads(tr_threads));
    }
    if (*attack) {
      return run_attack(at_loss, at_data, at_out, at_seed, at_gamma,
                        at_lambda, at_reg, at_bits, at_skip_secure);
    }
    if (*bench) {
      return run_bench(be_dims, be_sparsities, be_bits, be_reps, be_out,
                       be_seed, resolve_threads(be_threads));
    }
  } catch (const dphe::SecurityError& e) {
    std::cerr << "security assertion failed: " << e.what() << "\n";
    return kExitSecurity;
  } catch (const dphe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dphe::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}
