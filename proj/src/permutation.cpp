#include "dphe/permutation.hpp"

#include <numeric>
#include <string>

#include "dphe/errors.hpp"

namespace dphe {

Permutation::Permutation(std::vector<std::size_t> dest)
    : dest_(std::move(dest)) {
  std::vector<bool> seen(dest_.size(), false);
  for (std::size_t d : dest_) {
    if (d >= dest_.size() || seen[d]) {
      throw ConfigError("destination map is not a permutation of {0..." +
                        std::to_string(dest_.size()) + "-1}");
    }
    seen[d] = true;
  }
}

Permutation Permutation::identity(std::size_t size) {
  std::vector<std::size_t> dest(size);
  std::iota(dest.begin(), dest.end(), std::size_t{0});
  Permutation p;
  p.dest_ = std::move(dest);  // identity needs no bijection re-check
  return p;
}

std::size_t Permutation::operator()(std::size_t index) const {
  if (index >= dest_.size()) {
    throw ConfigError("index " + std::to_string(index) +
                      " outside permutation domain of size " +
                      std::to_string(dest_.size()));
  }
  return dest_[index];
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(dest_.size());
  for (std::size_t j = 0; j < dest_.size(); ++j) {
    inv[dest_[j]] = j;
  }
  Permutation p;
  p.dest_ = std::move(inv);
  return p;
}

Permutation Permutation::compose_after(const Permutation& other) const {
  if (other.size() != size()) {
    throw ConfigError("cannot compose permutations of sizes " +
                      std::to_string(other.size()) + " and " +
                      std::to_string(size()));
  }
  // x at j lands at other.dest[j], then at dest[other.dest[j]].
  std::vector<std::size_t> combined(size());
  for (std::size_t j = 0; j < size(); ++j) {
    combined[j] = dest_[other.dest_[j]];
  }
  Permutation p;
  p.dest_ = std::move(combined);
  return p;
}

std::vector<std::size_t> Permutation::apply_support(
    std::span<const std::size_t> support) const {
  std::vector<std::size_t> out(support.size());
  for (std::size_t j = 0; j < support.size(); ++j) {
    out[j] = (*this)(support[j]);
  }
  return out;
}

Permutation random_permutation(std::size_t size, Rng& rng) {
  std::vector<std::size_t> dest(size);
  std::iota(dest.begin(), dest.end(), std::size_t{0});
  for (std::size_t i = size; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(dest[i - 1], dest[j]);
  }
  Permutation p(std::move(dest));
  return p;
}

std::vector<std::size_t> double_permute(std::span<const std::size_t> support,
                                        const Permutation& shared,
                                        const Permutation& user_specific) {
  if (shared.size() != user_specific.size()) {
    throw ConfigError("shared and user-specific permutations disagree on "
                      "dimension");
  }
  const auto once = shared.apply_support(support);
  return user_specific.apply_support(once);
}

std::vector<std::size_t> partial_reorder(
    std::span<const std::size_t> permuted_support,
    const Permutation& user_specific) {
  return user_specific.inverse().apply_support(permuted_support);
}

}  // namespace dphe
