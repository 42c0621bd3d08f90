#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "segadv/env.hpp"
#include "segadv/sae.hpp"
#include "segadv/value_head.hpp"

namespace segadv {

struct PPOConfig {
  double clip_epsilon = 0.2;
  double actor_lr = 1.0;
  double critic_lr = 0.3;
  std::size_t rollouts_per_update = 64;
  std::size_t group_size = 8;
  std::size_t epochs_per_batch = 1;
  std::size_t value_warmup_updates = 10;
  std::size_t max_updates = 1000;
  std::size_t value_bucket_width = 8;
  bool value_flag_aware = true;
  double stop_at_success = 0.0;  // 0 disables early stopping
  EstimatorSpec estimator;
  std::uint64_t seed = 0;

  void validate() const {
    require(clip_epsilon > 0.0 && clip_epsilon < 1.0,
            "clip_epsilon must lie in (0, 1)");
    require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be positive");
    require(rollouts_per_update >= 1, "rollouts_per_update must be >= 1");
    require(group_size >= 2, "group_size must be >= 2");
    require(rollouts_per_update % group_size == 0,
            "rollouts_per_update must be a multiple of group_size");
    require(epochs_per_batch >= 1, "epochs_per_batch must be >= 1");
    require(max_updates >= 1, "max_updates must be >= 1");
    require(value_bucket_width >= 1, "value_bucket_width must be >= 1");
    require(stop_at_success >= 0.0 && stop_at_success <= 1.0,
            "stop_at_success must lie in [0, 1]");
    estimator.validate();
  }
};

// Per-token clipped surrogate term, to be maximized:
// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
inline double ppo_surrogate(double ratio, double advantage, double clip_epsilon) {
  require(ratio > 0.0, "importance ratio must be positive");
  require(clip_epsilon > 0.0 && clip_epsilon < 1.0,
          "clip_epsilon must lie in (0, 1)");
  const double clipped =
      std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

// A batch of rollouts partitioned into groups of group_size consecutive
// rollouts; each group shares one env instance, which is what GRPO
// normalizes within.
struct Batch {
  std::vector<Rollout> rollouts;
  std::size_t group_size = 1;

  std::size_t num_groups() const { return rollouts.size() / group_size; }
};

// n independent rollouts, each driven by its own seed stream derived from
// (seed, rollout index), so the batch is identical for any thread count.
inline Batch collect_batch(const JunctionEnv& env, const TabularPolicy& policy,
                           std::size_t n, std::size_t group_size,
                           std::uint64_t seed, std::size_t threads = 1) {
  require(n >= 1, "batch size must be >= 1");
  require(group_size >= 1 && n % group_size == 0,
          "batch size must be a multiple of group_size");
  Batch batch;
  batch.group_size = group_size;
  batch.rollouts.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    batch.rollouts[i] = rollout(env, policy, rng);
  });
  return batch;
}

// Advantages for every rollout in the batch under the configured estimator.
// Value-based estimators read the value head (terminal pinned to the observed
// reward); GRPO ignores it and normalizes terminal rewards within each group.
inline std::vector<AdvantageSeries> batch_advantages(const Batch& batch,
                                                     const ValueHead& values,
                                                     const EstimatorSpec& spec) {
  spec.validate();
  std::vector<AdvantageSeries> out(batch.rollouts.size());
  if (spec.kind == EstimatorKind::Grpo) {
    for (std::size_t g = 0; g < batch.num_groups(); ++g) {
      GroupContext ctx;
      ctx.epsilon = spec.grpo_epsilon;
      for (std::size_t i = 0; i < batch.group_size; ++i) {
        ctx.rewards.push_back(
            batch.rollouts[g * batch.group_size + i].traj.terminal_reward);
      }
      for (std::size_t i = 0; i < batch.group_size; ++i) {
        ctx.index = i;
        const std::size_t r = g * batch.group_size + i;
        out[r] = estimate(batch.rollouts[r].traj, nullptr, spec, &ctx);
      }
    }
    return out;
  }
  for (std::size_t r = 0; r < batch.rollouts.size(); ++r) {
    const ValueSeries vs = values.values_for(batch.rollouts[r]);
    out[r] = estimate(batch.rollouts[r].traj, &vs, spec);
  }
  return out;
}

// Batch objective of the clipped surrogate: mean over trajectories of the
// per-token sum. Corridor tokens have ratio exactly 1 under any policy pair
// (the emitted token is forced), so only junction tokens carry gradient.
inline double batch_surrogate(const JunctionEnv& env, const TabularPolicy& policy,
                              const Batch& batch,
                              const std::vector<AdvantageSeries>& advantages,
                              double clip_epsilon) {
  double total = 0.0;
  for (std::size_t r = 0; r < batch.rollouts.size(); ++r) {
    const Rollout& ro = batch.rollouts[r];
    const std::size_t T = ro.traj.length();
    for (std::size_t t = 0; t < T; ++t) {
      const double adv = advantages[r].advantages[t];
      if (env.is_junction_step(t)) {
        const std::size_t j = env.junction_index_at(t);
        const auto probs = policy.probs_at(j);
        const double ratio =
            probs[static_cast<std::size_t>(ro.traj.tokens[t])] / ro.traj.gen_probs[t];
        total += ppo_surrogate(ratio, adv, clip_epsilon);
      } else {
        total += adv;  // ratio == 1
      }
    }
  }
  return total / static_cast<double>(batch.rollouts.size());
}

// Gradient of batch_surrogate with respect to the policy logits, plus the
// fraction of junction tokens whose ratio left the clip region.
struct SurrogateGrad {
  std::vector<double> d_logits;  // junctions x choices
  double clip_fraction = 0.0;
};

inline SurrogateGrad batch_surrogate_grad(const JunctionEnv& env,
                                          const TabularPolicy& policy,
                                          const Batch& batch,
                                          const std::vector<AdvantageSeries>& advantages,
                                          double clip_epsilon) {
  SurrogateGrad out;
  out.d_logits.assign(policy.logits.size(), 0.0);
  std::size_t junction_tokens = 0;
  std::size_t clipped_tokens = 0;
  const double inv_n = 1.0 / static_cast<double>(batch.rollouts.size());
  for (std::size_t r = 0; r < batch.rollouts.size(); ++r) {
    const Rollout& ro = batch.rollouts[r];
    const std::size_t T = ro.traj.length();
    for (std::size_t t = 0; t < T; ++t) {
      if (!env.is_junction_step(t)) continue;
      ++junction_tokens;
      const std::size_t j = env.junction_index_at(t);
      const auto probs = policy.probs_at(j);
      const std::size_t a = static_cast<std::size_t>(ro.traj.tokens[t]);
      const double ratio = probs[a] / ro.traj.gen_probs[t];
      const double adv = advantages[r].advantages[t];
      const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
      if (ratio != clipped) ++clipped_tokens;
      // min() picks the unclipped branch when ratio*A <= clip(ratio)*A; its
      // derivative is A * ratio * (e_a - pi). The saturated clipped branch
      // has zero derivative.
      if (ratio * adv <= clipped * adv) {
        const double coef = inv_n * adv * ratio;
        double* row = out.d_logits.data() + j * policy.choices;
        for (std::size_t b = 0; b < policy.choices; ++b) {
          row[b] += coef * ((b == a ? 1.0 : 0.0) - probs[b]);
        }
      }
    }
  }
  out.clip_fraction = junction_tokens == 0
                          ? 0.0
                          : static_cast<double>(clipped_tokens) /
                                static_cast<double>(junction_tokens);
  return out;
}

struct TrainMetricsRow {
  std::size_t update = 0;
  double success_rate = 0.0;
  double mean_advantage = 0.0;
  double value_mse = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainMetrics {
  std::vector<TrainMetricsRow> rows;
};

constexpr std::size_t kNeverReached = std::numeric_limits<std::size_t>::max();

struct TrainResult {
  TrainMetrics metrics;
  TabularPolicy policy;
  std::size_t threshold_update = kNeverReached;  // first update with success >= stop_at_success
};

// Desk-scale PPO: value warm-up (critic regression only, policy frozen),
// then collect -> estimate advantages -> clipped-surrogate ascent + critic
// regression. Fully deterministic for a fixed seed at any thread count;
// wall_clock_s is populated only when record_timing is set so that metrics
// stay byte-reproducible by default.
inline TrainResult train(const JunctionEnv& env, const PPOConfig& cfg,
                         std::size_t threads = 1, bool record_timing = false,
                         ValueHead* value_out = nullptr) {
  env.validate();
  cfg.validate();
  const std::size_t T = env.horizon();

  TrainResult result;
  result.policy = TabularPolicy::uniform(env.junctions, env.choices);
  ValueHead value(T, cfg.value_bucket_width, cfg.value_flag_aware);

  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t total_updates = cfg.value_warmup_updates + cfg.max_updates;
  for (std::size_t u = 0; u < total_updates; ++u) {
    const bool warmup = u < cfg.value_warmup_updates;
    const Batch batch =
        collect_batch(env, result.policy, cfg.rollouts_per_update,
                      cfg.group_size, derive_seed(cfg.seed, 0xba7c, u), threads);

    double success = 0.0;
    for (const Rollout& r : batch.rollouts) success += r.traj.terminal_reward;
    success /= static_cast<double>(batch.rollouts.size());

    const std::vector<AdvantageSeries> advantages =
        batch_advantages(batch, value, cfg.estimator);
    double mean_adv = 0.0;
    std::size_t n_tokens = 0;
    for (const AdvantageSeries& a : advantages) {
      for (double x : a.advantages) mean_adv += x;
      n_tokens += a.advantages.size();
    }
    mean_adv /= static_cast<double>(n_tokens);

    double clip_fraction = 0.0;
    if (!warmup) {
      for (std::size_t epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
        const SurrogateGrad grad = batch_surrogate_grad(
            env, result.policy, batch, advantages, cfg.clip_epsilon);
        for (std::size_t i = 0; i < result.policy.logits.size(); ++i) {
          result.policy.logits[i] += cfg.actor_lr * grad.d_logits[i];
        }
        clip_fraction = grad.clip_fraction;
      }
    }
    value.regress(batch.rollouts, cfg.critic_lr);

    for (double l : result.policy.logits) {
      if (!std::isfinite(l)) {
        throw std::runtime_error(
            "training diverged: non-finite policy parameter at update " +
            std::to_string(u));
      }
    }
    for (double v : value.table()) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(
            "training diverged: non-finite value parameter at update " +
            std::to_string(u));
      }
    }

    TrainMetricsRow row;
    row.update = u;
    row.success_rate = success;
    row.mean_advantage = mean_adv;
    row.value_mse = value.mse_vs(exact_values(env, result.policy), T);
    row.clip_fraction = clip_fraction;
    row.entropy = result.policy.entropy();
    if (record_timing) {
      row.wall_clock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
              .count();
    }
    result.metrics.rows.push_back(row);

    if (!warmup && cfg.stop_at_success > 0.0 && success >= cfg.stop_at_success &&
        result.threshold_update == kNeverReached) {
      result.threshold_update = u;
      break;
    }
  }
  if (value_out) *value_out = value;
  return result;
}

}  // namespace segadv
