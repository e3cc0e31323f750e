#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dphe/attack.hpp"
#include "dphe/errors.hpp"
#include "dphe/fedlearn.hpp"
#include "dphe/rng.hpp"
#include "dphe/sparse.hpp"

using namespace dphe;

namespace {

double sc(double margin) { return 1.0 / (1.0 + std::exp(margin)); }

// Smallest linf distance from (x, y) to any candidate with matching label.
double best_recovery_error(const std::vector<AttackCandidate>& candidates,
                           const std::vector<double>& x, int y) {
  double best = std::numeric_limits<double>::infinity();
  for (const AttackCandidate& c : candidates) {
    if (c.label != y) continue;
    double err = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      err = std::max(err, std::fabs(c.x[d] - x[d]));
    }
    best = std::min(best, err);
  }
  return best;
}

// Samples on the 2^-10 grid keep the demo's forward step exact.
Dataset dyadic_dataset(std::size_t samples, std::size_t dim, Rng& rng) {
  Dataset data;
  data.dimension = dim;
  for (std::size_t i = 0; i < samples; ++i) {
    std::vector<double> x(dim);
    for (double& v : x) {
      v = std::ldexp(static_cast<double>(rng.below(2049)) - 1024.0, -10);
    }
    data.push_back(std::span<const double>(x), rng.below(2) == 0 ? 1 : -1);
  }
  return data;
}

}  // namespace

TEST_SUITE_BEGIN("attack");

TEST_CASE("compute_theta rescales the observed weight delta") {
  LeakObservation obs;
  obs.w_before = {1.0, 0.5};
  obs.w_after = {0.9, 0.7};
  obs.gamma = 0.1;
  const auto theta = compute_theta(obs);
  REQUIRE(theta.size() == 2);
  CHECK(theta[0] == doctest::Approx(1.0));
  CHECK(theta[1] == doctest::Approx(-2.0));
}

TEST_CASE("compute_theta subtracts the ridge gradient when asked") {
  LeakObservation obs;
  obs.w_before = {1.0, 0.5};
  obs.w_after = {0.9, 0.7};
  obs.gamma = 0.1;
  obs.lambda = 0.5;
  obs.regularizer = RegularizerKind::kL2;
  const auto theta = compute_theta(obs);
  CHECK(theta[0] == doctest::Approx(0.5));
  CHECK(theta[1] == doctest::Approx(-2.25));
}

TEST_CASE("compute_theta is exact on dyadic observations") {
  LeakObservation obs;
  obs.w_before = {1.0};
  obs.w_after = {0.75};
  obs.gamma = 0.25;
  CHECK(compute_theta(obs) == std::vector<double>{1.0});
}

TEST_CASE("compute_theta validates the observation") {
  LeakObservation obs;
  obs.w_before = {1.0};
  obs.w_after = {1.0, 2.0};
  obs.gamma = 0.1;
  CHECK_THROWS_AS((void)compute_theta(obs), ConfigError);
  obs.w_after = {1.0};
  obs.gamma = 0.0;
  CHECK_THROWS_AS((void)compute_theta(obs), ConfigError);
}

TEST_CASE("hinge inversion yields both signed readings") {
  const std::vector<double> theta{1.0, -2.0};
  const HingeInversion inv = invert_hinge(theta);
  CHECK(!inv.margin_satisfied);
  REQUIRE(inv.candidates.size() == 2);
  CHECK(inv.candidates[0].x == std::vector<double>{1.0, -2.0});
  CHECK(inv.candidates[0].label == -1);
  CHECK(inv.candidates[1].x == std::vector<double>{-1.0, 2.0});
  CHECK(inv.candidates[1].label == 1);
}

TEST_CASE("a zero hinge gradient means the margin was satisfied") {
  const HingeInversion inv = invert_hinge(std::vector<double>{0.0, 0.0});
  CHECK(inv.margin_satisfied);
  CHECK(inv.candidates.empty());
}

TEST_CASE("hinge inversion recovers simulated steps exactly") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.below(8);
    std::vector<double> x(dim);
    for (double& v : x) {
      v = std::ldexp(static_cast<double>(rng.below(513)) - 256.0, -8);
    }
    const int y = rng.below(2) == 0 ? 1 : -1;
    // violated margin: theta = -y * x
    std::vector<double> theta(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      theta[d] = -static_cast<double>(y) * x[d];
    }
    const HingeInversion inv = invert_hinge(theta);
    if (nnz(x) == 0) {
      CHECK(inv.margin_satisfied);
      continue;
    }
    CHECK(best_recovery_error(inv.candidates, x, y) == 0.0);
  }
}

TEST_CASE("logistic inversion with orthogonal weights has margin zero") {
  const std::vector<double> theta{0.5, -1.0};
  const std::vector<double> w_before{0.0, 0.0};
  const LogisticInversion inv = invert_logistic(theta, w_before);
  REQUIRE(inv.roots.size() == 1);
  CHECK(inv.roots[0] == 0.0);
  REQUIRE(inv.candidates.size() == 2);
  // s = 0 scales theta by -(1 + e^0) = -2
  CHECK(inv.candidates[0].x == std::vector<double>{-1.0, 2.0});
  CHECK(inv.candidates[0].label == 1);
  CHECK(inv.candidates[1].x == std::vector<double>{1.0, -2.0});
  CHECK(inv.candidates[1].label == -1);
}

TEST_CASE("logistic inversion recovers simulated steps") {
  Rng rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.below(6);
    std::vector<double> x(dim), w(dim);
    bool nonzero = false;
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = rng.gaussian();
      w[d] = rng.gaussian();
      nonzero = nonzero || x[d] != 0.0;
    }
    if (!nonzero) continue;
    const int y = rng.below(2) == 0 ? 1 : -1;

    double margin = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      margin += w[d] * x[d];
    }
    margin *= static_cast<double>(y);
    std::vector<double> theta(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      theta[d] = -static_cast<double>(y) * x[d] * sc(margin);
    }

    const LogisticInversion inv = invert_logistic(theta, w);
    CHECK(inv.max_residual <= 1e-9);
    CHECK(best_recovery_error(inv.candidates, x, y) <= 1e-6);
  }
}

TEST_CASE("small negative margins admit two consistent preimages") {
  // c = w . theta = -0.1 puts the fixed point in its two-root regime
  const std::vector<double> theta{1.0};
  const std::vector<double> w_before{-0.1};
  const LogisticInversion inv = invert_logistic(theta, w_before);
  REQUIRE(inv.roots.size() == 2);
  CHECK(inv.roots[0] > 0.1);
  CHECK(inv.roots[0] < 0.5);
  CHECK(inv.roots[1] > 3.4);
  CHECK(inv.roots[1] < 3.7);
  CHECK(inv.max_residual <= 1e-9);
  REQUIRE(inv.candidates.size() == 4);
  // every root satisfies the fixed point s = -c * (1 + e^s)
  for (double s : inv.roots) {
    CHECK(std::fabs(s + (-0.1) * (1.0 + std::exp(s))) <= 1e-9);
  }
}

TEST_CASE("strongly negative c has no consistent logistic step") {
  const std::vector<double> theta{1.0};
  const std::vector<double> w_before{-1.0};
  CHECK_THROWS_AS((void)invert_logistic(theta, w_before), Error);
}

TEST_CASE("logistic inversion validates its inputs") {
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> w{1.0, 1.0};
  CHECK_THROWS_AS((void)invert_logistic(zero, w), ConfigError);
  const std::vector<double> theta{1.0};
  CHECK_THROWS_AS((void)invert_logistic(theta, w), ConfigError);
}

TEST_CASE("batch-gradient leak scales the mean by the sample count") {
  const std::vector<double> theta{0.5, -0.25, 0.0};
  const GdLeak leak = gd_imbalance_leak(theta, 4);
  CHECK(leak.mean == theta);
  // 4 is a power of two, so the products are exact
  CHECK(leak.sum == std::vector<double>{2.0, -1.0, 0.0});
  CHECK_THROWS_AS((void)gd_imbalance_leak(theta, 0), ConfigError);
}

TEST_CASE("inverting a real local_update step recovers the sample") {
  // one hinge step from zero weights through the trainer itself
  Dataset data;
  data.push_back(std::vector<double>{0.5, -0.25, 1.0}, -1);
  TrainConfig config;
  config.gamma0 = 0.125;
  config.lambda = 0.0;
  config.local_steps = 1;
  Rng rng(103);
  LinearModel start;
  start.dimension = 3;
  start.weights.assign(3, 0.0);
  const LinearModel after = local_update(start, data, config, rng);

  LeakObservation obs;
  obs.w_before = start.weights;
  obs.w_after = after.weights;
  obs.gamma = config.gamma0;
  const HingeInversion inv = invert_hinge(compute_theta(obs));
  CHECK(best_recovery_error(inv.candidates,
                            std::vector<double>{0.5, -0.25, 1.0}, -1) == 0.0);
}

TEST_CASE("the hinge demo recovers its sample exactly") {
  Rng rng(104);
  const Dataset data = dyadic_dataset(12, 5, rng);
  AttackDemoConfig config;
  config.loss = "hinge";
  config.seed = 7;
  config.run_secure_counterpart = false;
  const AttackReport report = attack_report(data, config);
  CHECK(report.loss == "hinge");
  if (report.margin_satisfied) {
    CHECK(report.verdict ==
          "margin satisfied; the step leaked nothing to recover");
  } else {
    CHECK(report.linf_error == 0.0);
    CHECK(report.verdict == "exact recovery");
    CHECK(best_recovery_error(report.candidates, report.true_x,
                              report.true_label) == 0.0);
  }
}

TEST_CASE("the logistic demo recovers its sample to solver precision") {
  Rng rng(105);
  const Dataset data = dyadic_dataset(12, 5, rng);
  AttackDemoConfig config;
  config.loss = "logistic";
  config.seed = 8;
  config.run_secure_counterpart = false;
  const AttackReport report = attack_report(data, config);
  CHECK(!report.margin_satisfied);
  CHECK(report.linf_error <= 1e-6);
}

TEST_CASE("an all-zero sample leaves nothing for the hinge demo") {
  Dataset data;
  data.push_back(std::vector<double>{0.0, 0.0}, 1);
  AttackDemoConfig config;
  config.seed = 1;
  config.run_secure_counterpart = false;
  const AttackReport report = attack_report(data, config);
  CHECK(report.margin_satisfied);
  CHECK(report.candidates.empty());
  CHECK(report.linf_error == 0.0);
}

TEST_CASE("the secure counterpart shows nothing attackable") {
  Rng rng(106);
  const Dataset data = dyadic_dataset(6, 4, rng);
  AttackDemoConfig config;
  config.loss = "hinge";
  config.seed = 9;
  config.key_bits = 128;
  config.run_secure_counterpart = true;
  const AttackReport report = attack_report(data, config);
  CHECK(!report.secure_observable);
  CHECK(report.secure_note.find("no plaintext update observable") !=
        std::string::npos);
}

TEST_CASE("the demo validates its configuration") {
  Dataset data;
  data.push_back(std::vector<double>{1.0}, 1);
  AttackDemoConfig config;
  config.run_secure_counterpart = false;

  config.loss = "huber";
  CHECK_THROWS_AS((void)attack_report(data, config), ConfigError);
  config.loss = "hinge";
  config.gamma = 0.0;
  CHECK_THROWS_AS((void)attack_report(data, config), ConfigError);
  config.gamma = 0.125;

  Dataset empty;
  CHECK_THROWS_AS((void)attack_report(empty, config), ConfigError);
  Dataset multiclass;
  multiclass.push_back(std::vector<double>{1.0}, 2);
  CHECK_THROWS_AS((void)attack_report(multiclass, config), ConfigError);
}

TEST_CASE("report serialization carries the full story") {
  Rng rng(107);
  const Dataset data = dyadic_dataset(4, 3, rng);
  AttackDemoConfig config;
  config.loss = "hinge";
  config.seed = 3;
  config.run_secure_counterpart = false;
  const AttackReport report = attack_report(data, config);
  const nlohmann::json j = to_json(report);
  CHECK(j.at("loss") == "hinge");
  CHECK(j.at("true_sample").at("x").size() == 3);
  CHECK(j.at("candidates").size() == report.candidates.size());
  CHECK(j.contains("linf_error"));
  CHECK(j.contains("verdict"));
  CHECK(j.at("secure_counterpart").contains("observable_plaintext"));
}

TEST_SUITE_END();
