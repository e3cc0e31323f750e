#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dphe/fedlearn.hpp"

namespace dphe {

enum class RegularizerKind { kNone, kL2 };

// What a curious party sees when a user's plaintext update leaks: the model
// before and after one SGD step, plus the (assumed known) step parameters.
struct LeakObservation {
  std::vector<double> w_before;
  std::vector<double> w_after;
  double gamma = 0.0;
  double lambda = 0.0;
  RegularizerKind regularizer = RegularizerKind::kNone;
};

// Undoes the update-rule bookkeeping, leaving the bare loss gradient:
// (w_before - w_after) / gamma - lambda * grad_reg(w_before), with the
// regularizer gradient being w itself for the L2 convention (R = ||w||^2/2).
std::vector<double> compute_theta(const LeakObservation& obs);

struct AttackCandidate {
  std::vector<double> x;
  int label = 0;
};

struct HingeInversion {
  // Zero gradient means the step's sample had its margin satisfied; there
  // is nothing to recover.
  bool margin_satisfied = false;
  std::vector<AttackCandidate> candidates;
};

// A violated hinge margin gives theta = -y*x, so the sample is one of
// (theta, -1) or (-theta, +1).
HingeInversion invert_hinge(std::span<const double> theta);

struct LogisticInversion {
  // Solutions of s = -c*(1+e^s) with c = w_before . theta, ascending. One
  // root when c >= 0; for small negative c the curve admits two, and both
  // are returned since both are consistent with the observation.
  std::vector<double> roots;
  double max_residual = 0.0;
  // One X = -theta*(1+e^s) per root, each readable as (X,+1) or (-X,-1).
  std::vector<AttackCandidate> candidates;
};

LogisticInversion invert_logistic(std::span<const double> theta,
                                  std::span<const double> w_before);

struct GdLeak {
  std::vector<double> mean;  // theta: mean over all K samples
  std::vector<double> sum;   // K*theta: summed misclassified features
};

// Full-batch hinge gradient on an all-negative-label dataset equals the
// mean of the misclassified samples' features, so theta times the (public)
// sample count recovers their sum.
GdLeak gd_imbalance_leak(std::span<const double> theta,
                         std::size_t sample_count);

struct AttackDemoConfig {
  std::string loss = "hinge";  // "hinge" or "logistic"
  double gamma = 0.125;
  double lambda = 0.0;
  RegularizerKind regularizer = RegularizerKind::kNone;
  std::uint64_t seed = 0;
  int key_bits = 512;  // for the secure counterpart run
  bool run_secure_counterpart = true;
};

struct AttackReport {
  std::string loss;
  std::vector<double> true_x;
  int true_label = 0;
  bool margin_satisfied = false;
  std::vector<AttackCandidate> candidates;
  double linf_error = 0.0;
  std::string verdict;
  bool secure_observable = false;
  std::string secure_note;
};

// End-to-end demo: pick a sample, simulate one plaintext SGD step, invert
// the leaked update, and measure recovery error against the truth. When
// enabled, the same update is also pushed through the secure protocol and
// the transcript inspected to show the attack finds nothing there.
AttackReport attack_report(const Dataset& data,
                           const AttackDemoConfig& config);

nlohmann::json to_json(const AttackReport& report);

}  // namespace dphe
