#include "dphe/encoding.hpp"

#include <cmath>

#include "dphe/errors.hpp"

namespace dphe {

FixedPointCodec::FixedPointCodec(int frac_bits, const mpz_class& modulus,
                                 long max_terms, double max_magnitude)
    : frac_bits_(frac_bits),
      modulus_(modulus),
      half_modulus_(modulus / 2),
      max_terms_(max_terms),
      max_magnitude_(max_magnitude),
      scale_(std::ldexp(1.0, frac_bits)) {
  if (frac_bits < 1 || frac_bits > 256) {
    throw ConfigError("fixed-point fraction bits out of range: " +
                      std::to_string(frac_bits));
  }
  if (modulus_ <= 1) {
    throw ConfigError("fixed-point modulus must exceed 1");
  }
  if (max_terms_ < 1) {
    throw ConfigError("fixed-point max_terms must be positive");
  }
  if (!(max_magnitude_ > 0.0) || !std::isfinite(max_magnitude_)) {
    throw ConfigError("fixed-point max_magnitude must be finite and positive");
  }
  // max_terms * ceil(max_magnitude * 2^f) must fit under n/2. Using the
  // ceiling keeps the check conservative for non-integer magnitudes.
  mpz_class worst(std::ceil(max_magnitude_ * scale_));
  worst *= max_terms_;
  if (worst >= half_modulus_) {
    throw CapacityExceededError(
        "fixed-point headroom exhausted: max_terms * max_magnitude * 2^f "
        "must stay below modulus/2");
  }
}

mpz_class FixedPointCodec::encode(double x) const {
  if (!std::isfinite(x)) {
    throw ConfigError("cannot encode non-finite value");
  }
  if (std::fabs(x) > max_magnitude_) {
    throw CapacityExceededError("value magnitude " + std::to_string(x) +
                                " exceeds codec bound " +
                                std::to_string(max_magnitude_));
  }
  const double scaled = std::round(x * scale_);
  // |scaled| < n/2 by the constructor check, and 2^63 would already trip it
  // for small moduli, so mpz_class(double) is exact here.
  mpz_class fixed(scaled);
  if (fixed < 0) {
    fixed += modulus_;
  }
  return fixed;
}

double FixedPointCodec::decode(const mpz_class& m) const {
  if (m < 0 || m >= modulus_) {
    throw ConfigError("fixed-point decode input outside [0, modulus)");
  }
  mpz_class signed_value = m;
  if (signed_value > half_modulus_) {
    signed_value -= modulus_;
  }
  return std::ldexp(signed_value.get_d(), -frac_bits_);
}

}  // namespace dphe
