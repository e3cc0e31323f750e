#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dphe {

// Sparse view of a dense vector: w[support[j]] = values[j], everything else
// zero. Support entries are distinct, sorted ascending, and padded with the
// smallest unused indices (paired with zero values) up to the requested
// capacity, so every decomposition of the same dimension and capacity has
// the same shape on the wire.
struct SparseDecomposition {
  std::size_t dimension = 0;
  std::vector<std::size_t> support;
  std::vector<double> values;
};

// Count of exactly-zero entries is the complement of this: nnz uses exact
// comparison, not a tolerance, because the trainer produces hard zeros.
std::size_t nnz(std::span<const double> dense);

// Throws CapacityExceededError when the vector has more than `capacity`
// nonzeros. capacity == 0 means "exactly fit the nonzeros".
SparseDecomposition decompose(std::span<const double> dense,
                              std::size_t capacity);

std::vector<double> reconstruct(const SparseDecomposition& sparse);

// Splits a decomposition into ceil(nnz / capacity) shards of exactly
// `capacity` slots each, filled in ascending support order and zero-padded.
// The dense sum of the shards equals the original vector.
std::vector<SparseDecomposition> shard(std::span<const double> dense,
                                       std::size_t capacity);

}  // namespace dphe
