#include "dphe/synthetic.hpp"

#include "dphe/errors.hpp"
#include "dphe/rng.hpp"

namespace dphe {

namespace {

// Balanced draw: labels alternate so every split is half-and-half.
Dataset draw_split(std::size_t count, const GaussianTaskConfig& config,
                   Rng& rng) {
  Dataset data;
  data.dimension = config.dimension;
  std::vector<double> x(config.dimension);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = (i % 2 == 0) ? 1 : -1;
    const double shift =
        static_cast<double>(label) * config.separation / 2.0;
    for (std::size_t d = 0; d < config.dimension; ++d) {
      const double mean = d < config.informative ? shift : 0.0;
      x[d] = mean + config.noise * rng.gaussian();
    }
    data.push_back(x, label);
  }
  return data;
}

}  // namespace

GaussianTask make_gaussian_task(const GaussianTaskConfig& config) {
  if (config.dimension == 0 || config.informative == 0 ||
      config.informative > config.dimension) {
    throw ConfigError("need 1 <= informative <= dimension");
  }
  if (config.num_users == 0 || config.samples_per_user == 0) {
    throw ConfigError("need at least one user with at least one sample");
  }

  GaussianTask task;
  Rng root(config.seed);
  for (std::size_t n = 0; n < config.num_users; ++n) {
    Rng rng = root.child(n + 1);
    task.user_data.push_back(
        draw_split(config.samples_per_user, config, rng));
  }
  Rng init_rng = root.child(0x1a17);
  task.init_data = draw_split(config.init_samples, config, init_rng);
  Rng test_rng = root.child(0x7e57);
  task.test_data = draw_split(config.test_samples, config, test_rng);
  return task;
}

}  // namespace dphe
