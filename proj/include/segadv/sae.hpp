#pragma once

#include <algorithm>
#include <vector>

#include "segadv/estimators.hpp"
#include "segadv/segmentation.hpp"
#include "segadv/trajectory.hpp"

namespace segadv {

// Per-step decay factors: factors[t] is applied when crossing from state t to
// state t+1, and equals lambda iff state t+1 is a segment boundary, else 1.
// Since T is always a boundary, factors[T-1] = lambda; it multiplies A_T = 0
// and therefore never affects the result.
struct LambdaSchedule {
  std::vector<double> factors;
};

inline LambdaSchedule lambda_schedule(const BoundarySet& boundaries, double lambda,
                                      std::size_t T) {
  boundaries.validate();
  require(boundaries.T == T, "boundary set does not match trajectory length");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  LambdaSchedule out;
  out.factors.assign(T, 1.0);
  for (std::size_t u : boundaries.positions) out.factors[u - 1] = lambda;
  return out;
}

// Segmental advantage by the O(T) backward recursion:
// A_{T-1} = delta_{T-1}; A_t = delta_t + factors[t] * A_{t+1}.
inline AdvantageSeries sae_recursive(const DeltaSeries& deltas,
                                     const LambdaSchedule& schedule) {
  const std::size_t T = deltas.deltas.size();
  require_aligned(schedule.factors.size() == T,
                  "lambda schedule length must match delta series length");
  AdvantageSeries out;
  out.advantages.resize(T);
  double acc = 0.0;
  for (std::size_t i = T; i-- > 0;) {
    acc = deltas.deltas[i] + schedule.factors[i] * acc;
    out.advantages[i] = acc;
  }
  return out;
}

// Slow reference formulations, shipped (not test-only) so the claim that all
// three agree stays executable; use sae_recursive for anything
// performance-sensitive.
namespace reference {

// Geometric mixture over boundary-anchored bootstrap targets:
// A_t = (1-lambda) * sum over interior boundaries after t of
//       lambda^(rank) * (V(s_boundary) - V(s_t))
//       + lambda^(#interior after t) * (V(s_T) - V(s_t)).
// The bootstrapped-target weights sum to 1 for every t.
inline AdvantageSeries sae_boundary_form(const ValueSeries& values,
                                         const BoundarySet& boundaries,
                                         double lambda) {
  boundaries.validate();
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  const std::size_t T = boundaries.T;
  require_aligned(values.values.size() == T + 1,
                  "value series must have T + 1 entries");
  const auto& pos = boundaries.positions;
  const std::size_t K = pos.size();  // pos[K-1] == T
  AdvantageSeries out;
  out.advantages.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double vt = values.values[t];
    // First boundary strictly after t.
    std::size_t j = static_cast<std::size_t>(
        std::upper_bound(pos.begin(), pos.end(), t) - pos.begin());
    double acc = 0.0;
    double w = 1.0;  // lambda^(k - j), starting at lambda^0
    for (std::size_t k = j; k + 1 < K; ++k) {
      acc += w * (values.values[pos[k]] - vt);
      w *= lambda;
    }
    // When no interior boundary follows t, w = 1 and this is the pure
    // Monte Carlo term.
    out.advantages[t] = (1.0 - lambda) * acc + w * (values.values[T] - vt);
  }
  return out;
}

// Direct O(T^2) evaluation: A_t = sum_l (prod_{i<l} factors[t+i]) * delta_{t+l}.
inline AdvantageSeries sae_product_form(const DeltaSeries& deltas,
                                        const LambdaSchedule& schedule) {
  const std::size_t T = deltas.deltas.size();
  require_aligned(schedule.factors.size() == T,
                  "lambda schedule length must match delta series length");
  AdvantageSeries out;
  out.advantages.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (std::size_t l = 0; t + l < T; ++l) {
      acc += w * deltas.deltas[t + l];
      w *= schedule.factors[t + l];
    }
    out.advantages[t] = acc;
  }
  return out;
}

}  // namespace reference

// Group membership needed by the GRPO path: the terminal rewards of every
// rollout in the group and this trajectory's index within it.
struct GroupContext {
  std::vector<double> rewards;
  std::size_t index = 0;
  double epsilon = 1e-8;
};

// Dispatch over the configured estimator. `values` may be null only for
// GRPO, which ignores the value series and broadcasts the group-normalized
// scalar to every token.
inline AdvantageSeries estimate(const Trajectory& traj, const ValueSeries* values,
                                const EstimatorSpec& spec,
                                const GroupContext* group = nullptr) {
  spec.validate();
  traj.validate();
  const std::size_t T = traj.length();

  if (spec.kind == EstimatorKind::Grpo) {
    require(group != nullptr, "GRPO requires a group context");
    require(group->index < group->rewards.size(),
            "group index out of range");
    const double scalar =
        grpo_advantages(group->rewards, group->epsilon)[group->index];
    AdvantageSeries out;
    out.advantages.assign(T, scalar);
    return out;
  }

  require(values != nullptr, "this estimator requires a value series");
  const DeltaSeries deltas = compute_deltas(traj, *values);
  switch (spec.kind) {
    case EstimatorKind::Gae:
      return gae(deltas, spec.lambda);
    case EstimatorKind::Mc:
      return mc_advantage(deltas);
    case EstimatorKind::AdaptiveLambda:
      return gae(deltas, adaptive_lambda(T, spec.adaptive_coeff));
    case EstimatorKind::Sae: {
      const BoundarySet b = segment(traj, *spec.segmentation);
      return sae_recursive(deltas, lambda_schedule(b, spec.lambda, T));
    }
    default:
      throw ValidationError("unknown estimator kind");
  }
}

}  // namespace segadv
