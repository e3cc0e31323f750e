#include "dphe/paillier.hpp"

#include <string>
#include <thread>

#include "dphe/errors.hpp"

namespace dphe::paillier {

namespace {

constexpr int kMillerRabinRounds = 40;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Random probable prime with exactly `bits` bits. The top two bits are set
// so the product of two such primes has exactly 2*bits bits.
mpz_class random_prime(int bits, Rng& rng) {
  const int max_attempts = 256 * bits;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    mpz_class c = rng.bits_mpz(static_cast<std::size_t>(bits));
    mpz_setbit(c.get_mpz_t(), bits - 1);
    mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    if (mpz_probab_prime_p(c.get_mpz_t(), kMillerRabinRounds) > 0) return c;
  }
  throw Error("paillier: prime generation failed after bounded retries");
}

void check_key_binding(const PublicKey& pk, const Ciphertext& ct) {
  if (ct.key_id != pk.key_id)
    throw KeyMismatchError("paillier: ciphertext bound to a different key");
}

// L(u) = (u - 1) / n, defined on u = 1 mod n.
mpz_class residue_quotient(const mpz_class& u, const mpz_class& n) {
  return mpz_class((u - 1) / n);
}

}  // namespace

PublicKey make_public_key(const mpz_class& n, int bits) {
  PublicKey pk;
  pk.n = n;
  pk.g = n + 1;
  pk.n_squared = n * n;
  pk.bits = bits;
  pk.key_id = fnv1a64(n.get_str(16));
  return pk;
}

Keypair keygen(int bits, Rng& rng) {
  if (bits < 16) throw ConfigError("paillier: key size must be >= 16 bits");
  const int p_bits = bits / 2;
  const int q_bits = bits - p_bits;
  for (int attempt = 0; attempt < 64; ++attempt) {
    mpz_class p = random_prime(p_bits, rng);
    mpz_class q = random_prime(q_bits, rng);
    if (p == q) continue;
    mpz_class n = p * q;
    mpz_class totient = (p - 1) * (q - 1);
    mpz_class d;
    mpz_gcd(d.get_mpz_t(), n.get_mpz_t(), totient.get_mpz_t());
    if (d != 1) continue;

    Keypair kp;
    kp.pub = make_public_key(n, bits);
    mpz_class pm1 = p - 1, qm1 = q - 1;
    mpz_lcm(kp.priv.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
    mpz_class u;
    mpz_powm(u.get_mpz_t(), kp.pub.g.get_mpz_t(), kp.priv.lambda.get_mpz_t(),
             kp.pub.n_squared.get_mpz_t());
    mpz_class l = residue_quotient(u, n);
    if (mpz_invert(kp.priv.mu.get_mpz_t(), l.get_mpz_t(), n.get_mpz_t()) == 0)
      continue;
    kp.priv.p = p;
    kp.priv.q = q;
    return kp;
  }
  throw Error("paillier: key generation failed");
}

Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m,
                              const mpz_class& r) {
  if (m < 0 || m >= pk.n)
    throw Error("paillier: plaintext out of range [0, n)");
  if (r < 1 || r >= pk.n) throw Error("paillier: nonce out of range [1, n)");
  mpz_class d;
  mpz_gcd(d.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
  if (d != 1) throw Error("paillier: nonce not coprime with modulus");

  // g^m = (1 + n)^m = 1 + n*m mod n^2.
  mpz_class gm = (1 + pk.n * m) % pk.n_squared;
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(),
           pk.n_squared.get_mpz_t());
  Ciphertext ct;
  ct.value = (gm * rn) % pk.n_squared;
  ct.key_id = pk.key_id;
  return ct;
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, Rng& rng) {
  mpz_class r, d;
  do {
    r = rng.below_mpz(pk.n);
    mpz_gcd(d.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
  } while (r < 2 || d != 1);
  return encrypt_with_nonce(pk, m, r);
}

mpz_class decrypt(const PrivateKey& sk, const PublicKey& pk,
                  const Ciphertext& ct) {
  check_key_binding(pk, ct);
  if (sk.p * sk.q != pk.n)
    throw KeyMismatchError("paillier: private key does not match public key");
  mpz_class u;
  mpz_powm(u.get_mpz_t(), ct.value.get_mpz_t(), sk.lambda.get_mpz_t(),
           pk.n_squared.get_mpz_t());
  return mpz_class((residue_quotient(u, pk.n) * sk.mu) % pk.n);
}

Ciphertext add(const PublicKey& pk, const Ciphertext& c1,
               const Ciphertext& c2) {
  check_key_binding(pk, c1);
  check_key_binding(pk, c2);
  Ciphertext out;
  out.value = (c1.value * c2.value) % pk.n_squared;
  out.key_id = pk.key_id;
  return out;
}

Ciphertext enc_zero(const PublicKey& pk, Rng& rng) {
  return encrypt(pk, 0, rng);
}

std::vector<Ciphertext> encrypt_many(const PublicKey& pk,
                                     std::span<const mpz_class> values,
                                     Rng& rng, int threads) {
  std::vector<Ciphertext> out(values.size());
  // One draw advances the caller's stream, so repeated calls use fresh
  // nonces; per-index children keep the result thread-count independent.
  const Rng base(rng.next_u64());
  auto encrypt_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng element_rng = base.child(i);
      out[i] = encrypt(pk, values[i], element_rng);
    }
  };
  if (threads <= 1 || values.size() < 2) {
    encrypt_range(0, values.size());
    return out;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), values.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (values.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(values.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(encrypt_range, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace dphe::paillier
