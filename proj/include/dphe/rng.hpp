#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dphe/errors.hpp"

namespace dphe {

// Deterministic random source. Every random choice in the library flows
// through an Rng so a whole run is reproducible from one seed. Independent
// streams for sub-tasks (per user, per round, per element) are derived with
// child(); a child stream depends only on the parent seed and the tag, not
// on how much the parent has already consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw Error("Rng::below: bound must be positive");
    // Rejection from the top of the range keeps the draw exactly uniform.
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % bound;
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v;
    do {
      u = real01();
    } while (u == 0.0);
    v = real01();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(6.283185307179586476925287 * v);
    has_spare_ = true;
    return r * std::cos(6.283185307179586476925287 * v);
  }

  // Uniform big integer in [0, bound), bound > 0.
  mpz_class below_mpz(const mpz_class& bound) {
    if (bound <= 0) throw Error("Rng::below_mpz: bound must be positive");
    const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
    mpz_class v;
    do {
      v = bits_mpz(bits);
    } while (v >= bound);
    return v;
  }

  // Uniform big integer in [0, 2^bits).
  mpz_class bits_mpz(std::size_t bits) {
    const std::size_t words = (bits + 63) / 64;
    std::vector<std::uint64_t> buf(words);
    for (auto& w : buf) w = gen_();
    mpz_class v;
    mpz_import(v.get_mpz_t(), buf.size(), -1, sizeof(std::uint64_t), 0, 0,
               buf.data());
    mpz_fdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), bits);
    return v;
  }

  // Independent derived stream. Depends only on (seed, tag).
  Rng child(std::uint64_t tag) const { return Rng(mix(seed_ ^ mix(tag))); }

 private:
  // splitmix64 finalizer; decorrelates nearby seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dphe
