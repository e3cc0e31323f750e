#include "dphe/sparse.hpp"

#include <algorithm>
#include <string>

#include "dphe/errors.hpp"

namespace dphe {

std::size_t nnz(std::span<const double> dense) {
  return static_cast<std::size_t>(
      std::count_if(dense.begin(), dense.end(),
                    [](double v) { return v != 0.0; }));
}

SparseDecomposition decompose(std::span<const double> dense,
                              std::size_t capacity) {
  SparseDecomposition out;
  out.dimension = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      out.support.push_back(i);
      out.values.push_back(dense[i]);
    }
  }
  const std::size_t count = out.support.size();
  const std::size_t slots = capacity == 0 ? count : capacity;
  if (count > slots) {
    throw CapacityExceededError(
        "vector has " + std::to_string(count) + " nonzeros but capacity is " +
        std::to_string(slots));
  }
  if (slots > dense.size()) {
    throw ConfigError("capacity " + std::to_string(slots) +
                      " exceeds dimension " + std::to_string(dense.size()));
  }
  if (count < slots) {
    // Pad with the smallest indices not already in the support, paired with
    // zero values. Both lists are ascending, so a two-pointer scan finds the
    // gaps and a plain merge restores one sorted, aligned pair of rows.
    std::vector<std::size_t> padding;
    padding.reserve(slots - count);
    std::size_t taken = 0;
    for (std::size_t candidate = 0;
         padding.size() < slots - count && candidate < dense.size();
         ++candidate) {
      if (taken < count && out.support[taken] == candidate) {
        ++taken;
      } else {
        padding.push_back(candidate);
      }
    }
    std::vector<std::size_t> merged_support(slots);
    std::vector<double> merged_values(slots);
    std::size_t a = 0;  // real entries
    std::size_t b = 0;  // padding entries
    for (std::size_t j = 0; j < slots; ++j) {
      const bool take_real =
          a < count && (b >= padding.size() || out.support[a] < padding[b]);
      if (take_real) {
        merged_support[j] = out.support[a];
        merged_values[j] = out.values[a];
        ++a;
      } else {
        merged_support[j] = padding[b];
        merged_values[j] = 0.0;
        ++b;
      }
    }
    out.support = std::move(merged_support);
    out.values = std::move(merged_values);
  }
  return out;
}

std::vector<double> reconstruct(const SparseDecomposition& sparse) {
  if (sparse.support.size() != sparse.values.size()) {
    throw ConfigError("sparse support/values length mismatch");
  }
  std::vector<double> dense(sparse.dimension, 0.0);
  for (std::size_t j = 0; j < sparse.support.size(); ++j) {
    const std::size_t idx = sparse.support[j];
    if (idx >= sparse.dimension) {
      throw ConfigError("sparse support index " + std::to_string(idx) +
                        " outside dimension " +
                        std::to_string(sparse.dimension));
    }
    dense[idx] += sparse.values[j];
  }
  return dense;
}

std::vector<SparseDecomposition> shard(std::span<const double> dense,
                                       std::size_t capacity) {
  if (capacity == 0) {
    throw ConfigError("shard capacity must be positive");
  }
  if (capacity > dense.size()) {
    throw ConfigError("shard capacity " + std::to_string(capacity) +
                      " exceeds dimension " + std::to_string(dense.size()));
  }
  std::vector<std::size_t> support;
  std::vector<double> values;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      support.push_back(i);
      values.push_back(dense[i]);
    }
  }
  const std::size_t count = support.size();
  const std::size_t shard_count = (count + capacity - 1) / capacity;
  std::vector<SparseDecomposition> shards;
  shards.reserve(shard_count);
  for (std::size_t s = 0; s < shard_count; ++s) {
    const std::size_t begin = s * capacity;
    const std::size_t end = std::min(begin + capacity, count);
    std::vector<double> partial(dense.size(), 0.0);
    for (std::size_t j = begin; j < end; ++j) {
      partial[support[j]] = values[j];
    }
    shards.push_back(decompose(partial, capacity));
  }
  return shards;
}

}  // namespace dphe
