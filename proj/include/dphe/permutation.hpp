#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dphe/errors.hpp"
#include "dphe/rng.hpp"

namespace dphe {

// Permutation of {0, ..., size-1} stored as a destination map: element at
// position j moves to position dest[j]. Applying to a vector scatters
// (y[dest[j]] = x[j]); applying to a support index rewrites it in place
// (r becomes dest[r]).
class Permutation {
 public:
  Permutation() = default;
  // Validates that `dest` is a bijection on {0, ..., dest.size()-1}.
  explicit Permutation(std::vector<std::size_t> dest);

  static Permutation identity(std::size_t size);

  std::size_t size() const { return dest_.size(); }
  std::size_t operator()(std::size_t index) const;
  const std::vector<std::size_t>& dest() const { return dest_; }

  Permutation inverse() const;
  // (this ∘ other): apply `other` first, then this.
  Permutation compose_after(const Permutation& other) const;

  template <typename T>
  std::vector<T> apply_vec(std::span<const T> x) const;

  std::vector<std::size_t> apply_support(
      std::span<const std::size_t> support) const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<std::size_t> dest_;
};

// Fisher-Yates shuffle of the identity map, driven by `rng`.
Permutation random_permutation(std::size_t size, Rng& rng);

// Support as rewritten by the user: the shared permutation first, then the
// user-specific one.
std::vector<std::size_t> double_permute(std::span<const std::size_t> support,
                                        const Permutation& shared,
                                        const Permutation& user_specific);

// Aggregator-side step: strips the user-specific layer from a doubly
// permuted support, leaving indices permuted by the shared map only.
std::vector<std::size_t> partial_reorder(
    std::span<const std::size_t> permuted_support,
    const Permutation& user_specific);

template <typename T>
std::vector<T> Permutation::apply_vec(std::span<const T> x) const {
  if (x.size() != dest_.size()) {
    throw ConfigError("permutation size mismatch: vector has " +
                      std::to_string(x.size()) + " entries, map has " +
                      std::to_string(dest_.size()));
  }
  std::vector<T> y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    y[dest_[j]] = x[j];
  }
  return y;
}

}  // namespace dphe
