#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

#include "dphe/rng.hpp"

namespace dphe::paillier {

// Additively homomorphic public-key cryptosystem over Z_n: the product of
// two ciphertexts decrypts to the sum of their plaintexts. The generator is
// fixed to n+1, which makes g^m mod n^2 a single multiplication.

struct PublicKey {
  mpz_class n;          // modulus, product of two equal-size primes
  mpz_class g;          // generator, fixed to n + 1
  mpz_class n_squared;  // ciphertext modulus
  int bits = 0;         // requested key size
  std::uint64_t key_id = 0;

  // Keys below 512 bits are fine for tests but offer no real security.
  bool insecure_test_only() const { return bits < 512; }
};

struct PrivateKey {
  mpz_class lambda;  // lcm(p-1, q-1)
  mpz_class mu;      // inverse of L(g^lambda mod n^2) modulo n
  mpz_class p;
  mpz_class q;
};

struct Ciphertext {
  mpz_class value;  // element of [0, n^2)
  std::uint64_t key_id = 0;
};

struct Keypair {
  PublicKey pub;
  PrivateKey priv;
};

// Rebuilds the derived public-key fields (g, n^2, key id) from the modulus.
PublicKey make_public_key(const mpz_class& n, int bits);

// Generates a fresh keypair with two random probable primes of bits/2 each
// (Miller-Rabin, 40 rounds). Deterministic given the rng seed. bits >= 16.
Keypair keygen(int bits, Rng& rng);

// Encrypts m in [0, n) with a fresh random nonce. Probabilistic: repeated
// encryptions of the same value yield different ciphertexts.
Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, Rng& rng);

// Encryption with an explicit nonce r in [1, n), gcd(r, n) = 1.
Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m,
                              const mpz_class& r);

// Inverse of encrypt; returns the plaintext in [0, n).
mpz_class decrypt(const PrivateKey& sk, const PublicKey& pk,
                  const Ciphertext& ct);

// Homomorphic addition: the result decrypts to (m1 + m2) mod n.
Ciphertext add(const PublicKey& pk, const Ciphertext& c1,
               const Ciphertext& c2);

// A full probabilistic encryption of zero (never the trivial ciphertext 1).
Ciphertext enc_zero(const PublicKey& pk, Rng& rng);

// Element-wise encryption. With threads > 1 the work is split across that
// many threads; nonces are drawn from per-index child streams so the result
// does not depend on the thread count.
std::vector<Ciphertext> encrypt_many(const PublicKey& pk,
                                     std::span<const mpz_class> values,
                                     Rng& rng, int threads = 1);

}  // namespace dphe::paillier
