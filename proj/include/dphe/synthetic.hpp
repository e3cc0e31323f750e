#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dphe/fedlearn.hpp"

namespace dphe {

// Two-class Gaussian task: a handful of informative dimensions separate the
// classes, the rest are pure noise, so a well-regularized linear model is
// both accurate and sparse.
struct GaussianTaskConfig {
  std::size_t dimension = 50;
  std::size_t informative = 5;
  std::size_t num_users = 5;
  std::size_t samples_per_user = 200;
  std::size_t init_samples = 200;
  std::size_t test_samples = 400;
  double separation = 4.0;  // distance between class means
  double noise = 1.0;
  std::uint64_t seed = 0;
};

struct GaussianTask {
  std::vector<Dataset> user_data;
  Dataset init_data;
  Dataset test_data;
};

GaussianTask make_gaussian_task(const GaussianTaskConfig& config);

}  // namespace dphe
