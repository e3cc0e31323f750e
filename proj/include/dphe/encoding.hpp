#pragma once

#include <gmpxx.h>

#include <cstdint>

namespace dphe {

// Fixed-point map between signed reals and the plaintext ring [0, n), chosen
// so that modular sums of encodings decode to real sums. Negative values use
// the modular representation (n - |v|): unlike an additive offset, it does
// not accumulate when ciphertexts are added.
class FixedPointCodec {
 public:
  // Headroom contract, checked here rather than at decode time:
  //   max_terms * max_magnitude * 2^frac_bits < n / 2
  // so any signed sum of up to max_terms in-range values decodes
  // unambiguously.
  FixedPointCodec(int frac_bits, const mpz_class& modulus, long max_terms,
                  double max_magnitude);

  // round(x * 2^frac_bits) mod n. |x| must be <= max_magnitude.
  mpz_class encode(double x) const;

  // Values above n/2 are negative; result is signed(m) / 2^frac_bits.
  double decode(const mpz_class& m) const;

  int frac_bits() const { return frac_bits_; }
  long max_terms() const { return max_terms_; }
  double max_magnitude() const { return max_magnitude_; }
  const mpz_class& modulus() const { return modulus_; }

 private:
  int frac_bits_;
  mpz_class modulus_;
  mpz_class half_modulus_;
  long max_terms_;
  double max_magnitude_;
  double scale_;
};

}  // namespace dphe
