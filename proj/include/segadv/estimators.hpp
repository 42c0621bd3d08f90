#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "segadv/segmentation.hpp"
#include "segadv/trajectory.hpp"

namespace segadv {

inline DeltaSeries compute_deltas(const Trajectory& traj, const ValueSeries& values) {
  traj.validate();
  values.validate_for(traj);
  const std::size_t T = traj.length();
  DeltaSeries out;
  out.deltas.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    out.deltas[t] = values.values[t + 1] - values.values[t];
  }
  return out;
}

// A_t = sum_l lambda^l delta_{t+l}, computed by the backward recursion
// A_t = delta_t + lambda * A_{t+1} with A_T = 0.
inline AdvantageSeries gae(const DeltaSeries& deltas, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  const std::size_t T = deltas.deltas.size();
  AdvantageSeries out;
  out.advantages.resize(T);
  double acc = 0.0;
  for (std::size_t i = T; i-- > 0;) {
    acc = deltas.deltas[i] + lambda * acc;
    out.advantages[i] = acc;
  }
  return out;
}

// Monte Carlo advantage: the lambda = 1 suffix sum, G_t - V(s_t).
inline AdvantageSeries mc_advantage(const DeltaSeries& deltas) {
  return gae(deltas, 1.0);
}

// lambda = 1 - 1/(coeff * length), clamped to [0, 1). Degenerate short
// sequences (coeff * length <= 1) clamp to 0 instead of erroring; the
// optional flag reports that case.
inline double adaptive_lambda(std::size_t length, double coeff,
                              bool* degenerate = nullptr) {
  require(length >= 1, "length must be >= 1");
  require(coeff > 0.0, "adaptive lambda coefficient must be positive");
  const double cl = coeff * static_cast<double>(length);
  if (degenerate) *degenerate = (cl <= 1.0);
  if (cl <= 1.0) return 0.0;
  return 1.0 - 1.0 / cl;
}

// Group-relative advantages: (r_i - mean) / (population std + epsilon).
// A zero-variance group yields all-zero advantages for any epsilon.
inline std::vector<double> grpo_advantages(std::span<const double> group_rewards,
                                           double epsilon) {
  require(group_rewards.size() >= 2, "GRPO group size must be >= 2");
  require(epsilon >= 0.0, "epsilon must be non-negative");
  const double n = static_cast<double>(group_rewards.size());
  double mean = 0.0;
  for (double r : group_rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : group_rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double denom = std::sqrt(var) + epsilon;
  std::vector<double> out(group_rewards.size());
  for (std::size_t i = 0; i < group_rewards.size(); ++i) {
    const double num = group_rewards[i] - mean;
    out[i] = (num == 0.0) ? 0.0 : num / denom;
  }
  return out;
}

enum class EstimatorKind { Gae, Sae, Mc, AdaptiveLambda, Grpo };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Gae;
  double lambda = 0.95;
  std::optional<SegmentationConfig> segmentation;  // required iff kind == Sae
  double adaptive_coeff = 0.2;
  double grpo_epsilon = 1e-8;

  void validate() const {
    require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
    require(adaptive_coeff > 0.0, "adaptive_coeff must be positive");
    require(grpo_epsilon >= 0.0, "grpo_epsilon must be non-negative");
    if (kind == EstimatorKind::Sae) {
      require(segmentation.has_value(), "SAE requires a segmentation config");
      segmentation->validate();
    }
  }
};

}  // namespace segadv
