#include "dphe/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dphe/errors.hpp"

namespace dphe {

namespace {

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::exception&) {
    throw IoError("cannot parse number '" + text + "' in " + where);
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path + " for reading");
  }
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  return out;
}

}  // namespace

std::string to_hex(const mpz_class& value) {
  return value.get_str(16);
}

mpz_class from_hex(const std::string& text) {
  mpz_class value;
  if (value.set_str(text, 16) != 0) {
    throw IoError("'" + text + "' is not a hex integer");
  }
  return value;
}

nlohmann::json public_key_to_json(const paillier::PublicKey& pk) {
  return {{"bits", pk.bits}, {"n", to_hex(pk.n)}, {"g", to_hex(pk.g)}};
}

nlohmann::json private_key_to_json(const paillier::PrivateKey& sk) {
  return {{"lambda", to_hex(sk.lambda)},
          {"mu", to_hex(sk.mu)},
          {"p", to_hex(sk.p)},
          {"q", to_hex(sk.q)}};
}

paillier::PublicKey public_key_from_json(const nlohmann::json& j) {
  const int bits = j.at("bits").get<int>();
  const mpz_class n = from_hex(j.at("n").get<std::string>());
  paillier::PublicKey pk = paillier::make_public_key(n, bits);
  if (from_hex(j.at("g").get<std::string>()) != pk.g) {
    throw IoError("public key uses an unsupported generator (expected n+1)");
  }
  return pk;
}

paillier::PrivateKey private_key_from_json(const nlohmann::json& j) {
  paillier::PrivateKey sk;
  sk.lambda = from_hex(j.at("lambda").get<std::string>());
  sk.mu = from_hex(j.at("mu").get<std::string>());
  sk.p = from_hex(j.at("p").get<std::string>());
  sk.q = from_hex(j.at("q").get<std::string>());
  return sk;
}

SimulationConfig simulation_config_from_json(const nlohmann::json& j) {
  SimulationConfig config;
  try {
    config.protocol.dimension = j.at("D").get<std::size_t>();
    config.protocol.num_users = j.at("N").get<std::size_t>();
    config.protocol.capacity = j.at("M").get<std::size_t>();
    config.protocol.key_bits = j.value("key_bits", 512);
    config.protocol.frac_bits = j.value("frac_bits", 32);
    config.protocol.max_magnitude = j.value("max_magnitude", 1.0);
    config.protocol.allow_few_users = j.value("allow_few_users", false);
    if (j.contains("seed")) {
      config.has_seed = true;
      config.seed = j.at("seed").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad protocol config: ") + e.what());
  }
  return config;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig config;
  try {
    config.rounds = j.value("rounds", config.rounds);
    config.local_steps = j.value("local_steps", config.local_steps);
    config.gamma0 = j.value("gamma0", config.gamma0);
    config.t0 = j.value("t0", config.t0);
    config.lambda = j.value("lambda", config.lambda);
    config.l1_ratio = j.value("l1_ratio", config.l1_ratio);
    config.target_sparsity =
        j.value("target_sparsity", config.target_sparsity);
    config.num_users = j.value("num_users", config.num_users);
    config.seed = j.value("seed", config.seed);
    config.standardize = j.value("standardize", config.standardize);
    config.key_bits = j.value("key_bits", config.key_bits);
    config.frac_bits = j.value("frac_bits", config.frac_bits);
    config.allow_few_users =
        j.value("allow_few_users", config.allow_few_users);
    config.threads = j.value("threads", config.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  config.validate();
  return config;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(path + " is empty");
  }
  const std::vector<std::string> header = split_line(line);
  if (header.empty() || header[0] != "label") {
    throw IoError(path + ": first column must be 'label'");
  }
  for (std::size_t d = 1; d < header.size(); ++d) {
    if (header[d] != "f" + std::to_string(d - 1)) {
      throw IoError(path + ": feature columns must be f0..f{D-1} in order");
    }
  }
  Dataset data;
  data.dimension = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    }
    const std::string where = path + ":" + std::to_string(line_no);
    const double label = parse_double(fields[0], where);
    if (label != static_cast<int>(label)) {
      throw IoError(where + ": label must be an integer");
    }
    std::vector<double> x(data.dimension);
    for (std::size_t d = 0; d < data.dimension; ++d) {
      x[d] = parse_double(fields[d + 1], where);
    }
    data.push_back(x, static_cast<int>(label));
  }
  if (data.size() == 0) {
    throw IoError(path + " has no samples");
  }
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out = open_output(path);
  out << "label";
  for (std::size_t d = 0; d < data.dimension; ++d) {
    out << ",f" << d;
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.sample(i)) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_matrix_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_line(line);
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      row[i] =
          parse_double(fields[i], path + ":" + std::to_string(line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": rows have inconsistent lengths");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw IoError(path + " has no rows");
  }
  return rows;
}

void write_vector_csv(const std::string& path, std::span<const double> v) {
  std::ofstream out = open_output(path);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << (i == 0 ? "" : ",") << format_double(v[i]);
  }
  out << '\n';
}

void write_metrics_csv(const std::string& path,
                       std::span<const RoundMetrics> metrics,
                       bool include_timings) {
  std::ofstream out = open_output(path);
  out << "round,accuracy,sparsity,lambda,wallclock_encrypt_ms\n";
  for (const RoundMetrics& row : metrics) {
    out << row.round << ',' << format_double(row.accuracy) << ','
        << format_double(row.sparsity) << ',' << format_double(row.lambda)
        << ','
        << format_double(include_timings ? row.wallclock_encrypt_ms : 0.0)
        << '\n';
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

void write_transcript_jsonl(const std::string& path,
                            const Transcript& transcript) {
  std::ofstream out = open_output(path);
  transcript.write_jsonl(out);
}

}  // namespace dphe
