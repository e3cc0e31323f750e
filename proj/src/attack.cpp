#include "dphe/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dphe/errors.hpp"
#include "dphe/protocol.hpp"
#include "dphe/rng.hpp"
#include "dphe/transcript.hpp"

namespace dphe {

namespace {

constexpr double kExpCap = 690.0;  // e^s overflows doubles near 709

// Residual of the scalar fixed point s + c*(1+e^s) = 0. For s beyond the
// overflow cap only the c*e^s term matters, so return its sign as +-inf.
double fixed_point_residual(double s, double c) {
  if (s > kExpCap) {
    return c > 0.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  }
  return s + c * (1.0 + std::exp(s));
}

// Bisection between a negative-residual and positive-residual endpoint,
// then a guarded Newton polish. Returns the root s.
double solve_bracketed(double lo, double hi, double c) {
  double flo = fixed_point_residual(lo, c);
  for (int iter = 0; iter < 160; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = fixed_point_residual(mid, c);
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  double s = 0.5 * (lo + hi);
  double best = std::fabs(fixed_point_residual(s, c));
  for (int iter = 0; iter < 8 && s <= kExpCap; ++iter) {
    const double es = std::exp(s);
    const double derivative = 1.0 + c * es;
    if (derivative == 0.0) {
      break;
    }
    const double next = s - (s + c * (1.0 + es)) / derivative;
    if (!std::isfinite(next)) {
      break;
    }
    const double next_residual = std::fabs(fixed_point_residual(next, c));
    if (next_residual >= best) {
      break;
    }
    s = next;
    best = next_residual;
  }
  return s;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double sigmoid_complement(double margin) {
  // 1/(1+e^margin), evaluated without overflow for large |margin|.
  if (margin > kExpCap) {
    return 0.0;
  }
  if (margin < -kExpCap) {
    return 1.0;
  }
  return 1.0 / (1.0 + std::exp(margin));
}

}  // namespace

std::vector<double> compute_theta(const LeakObservation& obs) {
  if (obs.w_before.size() != obs.w_after.size()) {
    throw ConfigError("before/after weight vectors differ in length");
  }
  if (!(obs.gamma > 0.0)) {
    throw ConfigError("learning rate must be positive to invert the step");
  }
  std::vector<double> theta(obs.w_before.size());
  for (std::size_t d = 0; d < theta.size(); ++d) {
    theta[d] = (obs.w_before[d] - obs.w_after[d]) / obs.gamma;
    if (obs.regularizer == RegularizerKind::kL2) {
      theta[d] -= obs.lambda * obs.w_before[d];
    }
  }
  return theta;
}

HingeInversion invert_hinge(std::span<const double> theta) {
  HingeInversion result;
  if (all_zero(theta)) {
    result.margin_satisfied = true;
    return result;
  }
  AttackCandidate negative;
  negative.x.assign(theta.begin(), theta.end());
  negative.label = -1;
  AttackCandidate positive;
  positive.x.resize(theta.size());
  for (std::size_t d = 0; d < theta.size(); ++d) {
    positive.x[d] = -theta[d];
  }
  positive.label = 1;
  result.candidates = {std::move(negative), std::move(positive)};
  return result;
}

LogisticInversion invert_logistic(std::span<const double> theta,
                                  std::span<const double> w_before) {
  if (theta.size() != w_before.size()) {
    throw ConfigError("theta and weights differ in length");
  }
  if (all_zero(theta)) {
    throw ConfigError(
        "logistic gradient is never zero; a zero theta is not invertible");
  }
  const double c =
      std::inner_product(w_before.begin(), w_before.end(), theta.begin(),
                         0.0);

  LogisticInversion result;
  if (c == 0.0) {
    result.roots = {0.0};
  } else if (c > 0.0) {
    // Residual rises monotonically through exactly one root left of zero.
    double lo = -(2.0 * c + 1.0);
    while (fixed_point_residual(lo, c) > 0.0) {
      lo *= 2.0;
    }
    result.roots = {solve_bracketed(lo, 0.0, c)};
  } else {
    // Negative c: the residual peaks at s = ln(-1/c). No root if the peak
    // is below zero; otherwise one root on each side of the peak. Both are
    // legitimate preimages of the observed gradient, so keep both.
    const double peak_s = -std::log(-c);
    const double peak = fixed_point_residual(peak_s, c);
    if (peak < 0.0) {
      throw Error("observation is inconsistent with a logistic step: the "
                  "update fixed point has no real solution");
    }
    double lo = peak_s - 1.0;
    double step = 1.0;
    while (fixed_point_residual(lo, c) > 0.0) {
      step *= 2.0;
      lo -= step;
    }
    double hi = peak_s + 1.0;
    step = 1.0;
    while (fixed_point_residual(hi, c) > 0.0) {
      step *= 2.0;
      hi += step;
    }
    const double left = solve_bracketed(lo, peak_s, c);
    const double right = solve_bracketed(hi, peak_s, c);
    result.roots = {left, right};
    if (std::fabs(right - left) <=
        1e-9 * std::max(1.0, std::fabs(left))) {
      result.roots.pop_back();  // tangent case: both brackets met the peak
    }
    std::sort(result.roots.begin(), result.roots.end());
  }

  for (double s : result.roots) {
    result.max_residual = std::max(
        result.max_residual, std::fabs(fixed_point_residual(s, c)));
    if (s > kExpCap) {
      continue;  // the implied sample magnitude is not representable
    }
    const double scale = -(1.0 + std::exp(s));
    AttackCandidate positive;
    positive.x.resize(theta.size());
    for (std::size_t d = 0; d < theta.size(); ++d) {
      positive.x[d] = scale * theta[d];
    }
    positive.label = 1;
    AttackCandidate negative;
    negative.x.resize(theta.size());
    for (std::size_t d = 0; d < theta.size(); ++d) {
      negative.x[d] = -positive.x[d];
    }
    negative.label = -1;
    result.candidates.push_back(std::move(positive));
    result.candidates.push_back(std::move(negative));
  }
  return result;
}

GdLeak gd_imbalance_leak(std::span<const double> theta,
                         std::size_t sample_count) {
  if (sample_count == 0) {
    throw ConfigError("sample count must be at least 1");
  }
  GdLeak leak;
  leak.mean.assign(theta.begin(), theta.end());
  leak.sum.resize(theta.size());
  for (std::size_t d = 0; d < theta.size(); ++d) {
    leak.sum[d] = static_cast<double>(sample_count) * theta[d];
  }
  return leak;
}

AttackReport attack_report(const Dataset& data,
                           const AttackDemoConfig& config) {
  if (config.loss != "hinge" && config.loss != "logistic") {
    throw ConfigError("loss must be 'hinge' or 'logistic'");
  }
  if (data.size() == 0) {
    throw ConfigError("attack demo needs a non-empty dataset");
  }
  for (int y : data.labels) {
    if (y != -1 && y != 1) {
      throw ConfigError("attack demo expects binary -1/+1 labels");
    }
  }
  if (!(config.gamma > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }

  Rng rng(config.seed);
  const std::size_t index =
      static_cast<std::size_t>(rng.below(data.size()));
  const auto x = data.sample(index);
  const int y = data.labels[index];
  const std::size_t dim = data.dimension;

  // Starting weights on a 2^-10 grid keep every forward/inverse operation
  // exact for grid-valued data. For the hinge demo, shrink until the
  // sample's margin is active, so there is something to recover.
  std::vector<double> w_before(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    w_before[d] =
        std::ldexp(static_cast<double>(rng.below(2049)) - 1024.0, -10);
  }
  auto margin_of = [&](const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      s += w[d] * x[d];
    }
    return static_cast<double>(y) * s;
  };
  if (config.loss == "hinge") {
    for (int attempt = 0; attempt < 64 && margin_of(w_before) >= 1.0;
         ++attempt) {
      for (double& w : w_before) {
        w = std::ldexp(w, -1);  // halving stays on the grid
      }
    }
  }

  // One SGD step, exactly as a user would take it.
  const double margin = margin_of(w_before);
  std::vector<double> w_after(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double grad = 0.0;
    if (config.loss == "hinge") {
      if (margin < 1.0) {
        grad = -static_cast<double>(y) * x[d];
      }
    } else {
      grad = -static_cast<double>(y) * x[d] * sigmoid_complement(margin);
    }
    if (config.regularizer == RegularizerKind::kL2) {
      grad += config.lambda * w_before[d];
    }
    w_after[d] = w_before[d] - config.gamma * grad;
  }

  LeakObservation obs;
  obs.w_before = w_before;
  obs.w_after = w_after;
  obs.gamma = config.gamma;
  obs.lambda = config.lambda;
  obs.regularizer = config.regularizer;
  const std::vector<double> theta = compute_theta(obs);

  AttackReport report;
  report.loss = config.loss;
  report.true_x.assign(x.begin(), x.end());
  report.true_label = y;

  if (config.loss == "hinge") {
    HingeInversion inv = invert_hinge(theta);
    report.margin_satisfied = inv.margin_satisfied;
    report.candidates = std::move(inv.candidates);
  } else {
    LogisticInversion inv = invert_logistic(theta, w_before);
    report.candidates = std::move(inv.candidates);
  }

  if (report.margin_satisfied) {
    report.linf_error = 0.0;
    report.verdict = "margin satisfied; the step leaked nothing to recover";
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const AttackCandidate& candidate : report.candidates) {
      if (candidate.label != y) {
        continue;
      }
      double err = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        err = std::max(err, std::fabs(candidate.x[d] - x[d]));
      }
      best = std::min(best, err);
    }
    report.linf_error = best;
    if (best == 0.0) {
      report.verdict = "exact recovery";
    } else if (best <= 1e-6) {
      report.verdict = "recovered within 1e-6";
    } else {
      report.verdict = "recovery failed";
    }
  }

  if (config.run_secure_counterpart) {
    // The same update, sent the secure way: encrypt it alongside two other
    // plausible updates and look for anything attackable in the transcript.
    double max_abs = 1.0;
    for (double v : w_after) {
      max_abs = std::max(max_abs, std::fabs(v));
    }
    for (double v : w_before) {
      max_abs = std::max(max_abs, std::fabs(v));
    }
    ProtocolConfig pc;
    pc.dimension = dim;
    pc.num_users = 3;
    pc.capacity = (dim + 1) / 2;
    pc.key_bits = config.key_bits;
    pc.max_magnitude = max_abs;
    Rng protocol_rng = rng.child(0x5ec);
    const SecureAverageResult secure = run_secure_average(
        pc, {w_after, w_before, std::vector<double>(dim, 0.0)},
        protocol_rng);
    bool saw_plaintext = false;
    for (const TranscriptEntry& entry : secure.transcript.entries()) {
      if (entry.payload.contains("plaintext_values")) {
        saw_plaintext = true;
      }
    }
    assert_transcript_secure(secure.transcript);
    report.secure_observable = saw_plaintext;
    report.secure_note =
        saw_plaintext
            ? "plaintext update visible in transcript"
            : "no plaintext update observable; the transcript carries only "
              "ciphertexts and doubly permuted supports";
  }
  return report;
}

nlohmann::json to_json(const AttackReport& report) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const AttackCandidate& c : report.candidates) {
    candidates.push_back({{"x", c.x}, {"label", c.label}});
  }
  nlohmann::json j{
      {"loss", report.loss},
      {"true_sample", {{"x", report.true_x}, {"label", report.true_label}}},
      {"candidates", std::move(candidates)},
      {"linf_error", report.linf_error},
      {"verdict", report.verdict},
      {"margin_satisfied", report.margin_satisfied},
  };
  j["secure_counterpart"] = {{"observable_plaintext", report.secure_observable},
                             {"note", report.secure_note}};
  return j;
}

}  // namespace dphe
