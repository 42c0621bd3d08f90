#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "segadv/env.hpp"
#include "segadv/trainer.hpp"
#include "segadv/value_head.hpp"

namespace segadv {

enum class OracleKind { ExactDp, MonteCarlo };

inline std::string to_string(OracleKind k) {
  return k == OracleKind::ExactDp ? "dp" : "mc";
}

// A sampled trajectory segment [start, end] in state indices with oracle
// values at both endpoints. a_star = v_end - v_start is assigned to every
// token (action step) in [start, end).
struct GroundTruthSegment {
  std::size_t traj_index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  double v_start = 0.0;
  double v_end = 0.0;
  double se_start = 0.0;  // MC oracle only; 0 under exact DP
  double se_end = 0.0;
  double a_star = 0.0;
};

struct SegmentSamplerConfig {
  std::size_t segments_per_trajectory = 4;
  bool allow_overlap = false;
  std::size_t max_attempts = 64;

  void validate() const {
    require(segments_per_trajectory >= 1, "need at least one segment per trajectory");
    require(max_attempts >= 1, "max_attempts must be >= 1");
  }
};

// Segments are drawn uniformly over (t, m) with m between 1 and T-t. By
// default overlapping draws are rejected (up to max_attempts each), so a
// trajectory may yield fewer segments than requested.
inline std::vector<GroundTruthSegment> ground_truth_advantages(
    const JunctionEnv& env, const TabularPolicy& policy,
    const std::vector<Rollout>& trajectories, OracleKind oracle,
    std::size_t mc_rollouts, const SegmentSamplerConfig& sampler,
    std::uint64_t seed) {
  sampler.validate();
  require(oracle == OracleKind::ExactDp || mc_rollouts >= 1,
          "MC oracle needs at least one rollout");
  const std::vector<double> dp = exact_values(env, policy);

  auto oracle_value = [&](const Rollout& r, std::size_t state_index,
                          std::uint64_t mc_seed) -> McValue {
    const std::size_t id = r.state_ids[state_index];
    if (oracle == OracleKind::ExactDp) return {dp[id], 0.0};
    return mc_value(env, policy, JunctionEnv::state_pos(id),
                    JunctionEnv::state_mistake(id), mc_rollouts, mc_seed);
  };

  std::vector<GroundTruthSegment> out;
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const std::size_t T = trajectories[r].traj.length();
    Rng rng(derive_seed(seed, 0x5e6, r));
    std::vector<std::pair<std::size_t, std::size_t>> accepted;
    for (std::size_t s = 0; s < sampler.segments_per_trajectory; ++s) {
      for (std::size_t attempt = 0; attempt < sampler.max_attempts; ++attempt) {
        const std::size_t t = rng.next_u64() % T;
        const std::size_t m = 1 + rng.next_u64() % (T - t);
        bool overlaps = false;
        if (!sampler.allow_overlap) {
          for (const auto& [at, ae] : accepted) {
            if (t < ae && at < t + m) {
              overlaps = true;
              break;
            }
          }
        }
        if (overlaps) continue;
        accepted.emplace_back(t, t + m);
        GroundTruthSegment seg;
        seg.traj_index = r;
        seg.start = t;
        seg.end = t + m;
        const McValue vs = oracle_value(trajectories[r], t, derive_seed(seed, r, 2 * s));
        const McValue ve =
            oracle_value(trajectories[r], t + m, derive_seed(seed, r, 2 * s + 1));
        seg.v_start = vs.mean;
        seg.v_end = ve.mean;
        seg.se_start = vs.std_error;
        seg.se_end = ve.std_error;
        seg.a_star = seg.v_end - seg.v_start;
        out.push_back(seg);
        break;
      }
    }
  }
  return out;
}

// Product-moment correlation. Constant input has no defined correlation and
// is reported as an error, never as 0.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  require_aligned(xs.size() == ys.size(), "pearson inputs must have equal length");
  require(xs.size() >= 2, "pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) {
    throw ValidationError("pearson correlation undefined for constant input");
  }
  return cov / std::sqrt(vx * vy);
}

struct CorrelationReport {
  std::string estimator;
  double param = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double pearson_r = std::numeric_limits<double>::quiet_NaN();  // NaN = undefined
  std::size_t n_points = 0;
  OracleKind oracle = OracleKind::ExactDp;
};

struct StudyConfig {
  std::size_t n_trajectories = 128;  // per seed; multiple of group_size
  std::size_t group_size = 8;
  SegmentSamplerConfig sampler;
  OracleKind oracle = OracleKind::ExactDp;
  std::size_t mc_rollouts = 32;
  std::vector<double> gae_lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                  0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> sae_ps{0.5};
  double sae_lambda = 0.95;
  double adaptive_coeff = 0.2;
  double grpo_epsilon = 1e-8;
  // Each seed draws its own partially-trained policy: per-junction
  // correct-choice probabilities uniform in [policy_q_min, policy_q_max].
  // Equal bounds pin every junction to that probability.
  double policy_q_min = 0.3;
  double policy_q_max = 0.9;
  // The study requires an imperfect critic: wide position buckets and/or a
  // critic that cannot see whether a mistake already happened.
  std::size_t value_bucket_width = 8;
  bool value_flag_aware = false;
  std::size_t warmup_rollouts = 256;
  std::size_t warmup_passes = 8;
  double critic_lr = 0.3;
  std::size_t seeds = 20;

  void validate() const {
    require(n_trajectories >= 2, "need at least two trajectories");
    require(group_size >= 2 && n_trajectories % group_size == 0,
            "n_trajectories must be a multiple of group_size (>= 2)");
    sampler.validate();
    require(mc_rollouts >= 1, "mc_rollouts must be >= 1");
    require(!gae_lambdas.empty(), "gae lambda sweep must be non-empty");
    for (double l : gae_lambdas)
      require(l >= 0.0 && l <= 1.0, "gae lambda must lie in [0, 1]");
    require(!sae_ps.empty(), "sae p sweep must be non-empty");
    for (double p : sae_ps)
      require(p > 0.0 && p <= 1.0, "sae p must lie in (0, 1]");
    require(sae_lambda >= 0.0 && sae_lambda <= 1.0, "sae lambda must lie in [0, 1]");
    require(adaptive_coeff > 0.0, "adaptive_coeff must be positive");
    require(policy_q_min > 0.0 && policy_q_min <= policy_q_max && policy_q_max < 1.0,
            "policy q range must satisfy 0 < min <= max < 1");
    require(value_bucket_width >= 2 || !value_flag_aware,
            "the correlation study needs an imperfect value head "
            "(bucket width >= 2 or a flag-blind critic)");
    require(warmup_rollouts >= 1 && warmup_passes >= 1,
            "value warm-up needs rollouts and passes");
    require(critic_lr > 0.0, "critic_lr must be positive");
    require(seeds >= 1, "need at least one seed");
  }
};

namespace detail {

struct TokenPairs {
  std::vector<double> xs;  // estimator advantage per covered token
  std::vector<double> ys;  // broadcast a_star
};

inline CorrelationReport make_report(const std::string& name, double param,
                                     std::uint64_t seed, OracleKind oracle,
                                     const TokenPairs& pairs) {
  CorrelationReport rep;
  rep.estimator = name;
  rep.param = param;
  rep.seed = seed;
  rep.oracle = oracle;
  rep.n_points = pairs.xs.size();
  if (pairs.xs.size() >= 2) {
    try {
      rep.pearson_r = pearson(pairs.xs, pairs.ys);
    } catch (const ValidationError&) {
      // Constant estimator output: correlation undefined, reported as NaN.
    }
  }
  return rep;
}

}  // namespace detail

// The per-seed study policy: junction confidences drawn uniformly from the
// configured range.
inline TabularPolicy study_policy(const JunctionEnv& env, const StudyConfig& cfg,
                                  std::uint64_t stream) {
  Rng rng(derive_seed(stream, 0x9017));
  TabularPolicy policy = TabularPolicy::uniform(env.junctions, env.choices);
  for (std::size_t j = 0; j < env.junctions; ++j) {
    const double q = rng.uniform(cfg.policy_q_min, cfg.policy_q_max);
    const double rest = (1.0 - q) / static_cast<double>(env.choices - 1);
    for (std::size_t a = 0; a < env.choices; ++a) {
      const bool correct = static_cast<std::int64_t>(a) == env.correct_choice[j];
      policy.logits[j * env.choices + a] = std::log(correct ? q : rest);
    }
  }
  return policy;
}

// One seed of the correlation study: warm an imperfect value head, collect a
// grouped batch, sample ground-truth segments, and correlate every
// estimator's per-token advantages with the broadcast a_star.
inline std::vector<CorrelationReport> correlation_study_seed(
    const JunctionEnv& env, const StudyConfig& cfg, std::uint64_t seed_value,
    std::uint64_t stream) {
  const TabularPolicy policy = study_policy(env, cfg, stream);
  const std::size_t T = env.horizon();

  ValueHead value(T, cfg.value_bucket_width, cfg.value_flag_aware);
  const Batch warm = collect_batch(env, policy, cfg.warmup_rollouts, 1,
                                   derive_seed(stream, 0x77a1));
  for (std::size_t pass = 0; pass < cfg.warmup_passes; ++pass) {
    value.regress(warm.rollouts, cfg.critic_lr);
  }

  const Batch batch = collect_batch(env, policy, cfg.n_trajectories,
                                    cfg.group_size, derive_seed(stream, 0xc011));
  const std::vector<GroundTruthSegment> segments = ground_truth_advantages(
      env, policy, batch.rollouts, cfg.oracle, cfg.mc_rollouts, cfg.sampler,
      derive_seed(stream, 0x0a5a));

  // Advantage series per estimator variant, evaluated on the whole batch.
  std::vector<std::pair<CorrelationReport, std::vector<AdvantageSeries>>> variants;
  auto add_variant = [&](const std::string& name, double param,
                         const EstimatorSpec& spec) {
    CorrelationReport skeleton;
    skeleton.estimator = name;
    skeleton.param = param;
    variants.emplace_back(skeleton, batch_advantages(batch, value, spec));
  };

  for (double p : cfg.sae_ps) {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::Sae;
    spec.lambda = cfg.sae_lambda;
    spec.segmentation = SegmentationConfig{SegMethod::Probability, p, 1, {}};
    add_variant("sae", p, spec);
  }
  for (double l : cfg.gae_lambdas) {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::Gae;
    spec.lambda = l;
    add_variant("gae", l, spec);
  }
  {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::Mc;
    add_variant("mc", 1.0, spec);
  }
  {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::AdaptiveLambda;
    spec.adaptive_coeff = cfg.adaptive_coeff;
    add_variant("adaptive", adaptive_lambda(T, cfg.adaptive_coeff), spec);
  }
  {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::Grpo;
    spec.grpo_epsilon = cfg.grpo_epsilon;
    add_variant("grpo", std::numeric_limits<double>::quiet_NaN(), spec);
  }

  std::vector<CorrelationReport> reports;
  reports.reserve(variants.size());
  for (auto& [skeleton, advantages] : variants) {
    detail::TokenPairs pairs;
    for (const GroundTruthSegment& seg : segments) {
      for (std::size_t t = seg.start; t < seg.end; ++t) {
        pairs.xs.push_back(advantages[seg.traj_index].advantages[t]);
        pairs.ys.push_back(seg.a_star);
      }
    }
    reports.push_back(detail::make_report(skeleton.estimator, skeleton.param,
                                          seed_value, cfg.oracle, pairs));
  }
  return reports;
}

// Runs the study over cfg.seeds independent seeds. Per-seed runs are
// parallelizable; aggregation order is fixed by seed index.
inline std::vector<CorrelationReport> correlation_study(const JunctionEnv& env,
                                                        const StudyConfig& cfg,
                                                        std::uint64_t root_seed,
                                                        std::size_t threads = 1) {
  env.validate();
  cfg.validate();
  std::vector<std::vector<CorrelationReport>> per_seed(cfg.seeds);
  parallel_for(cfg.seeds, threads, [&](std::size_t s) {
    per_seed[s] =
        correlation_study_seed(env, cfg, s, derive_seed(root_seed, 0x57d, s));
  });
  std::vector<CorrelationReport> out;
  for (auto& rows : per_seed) {
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

struct StudySummaryRow {
  std::string estimator;
  double param = 0.0;
  double mean_r = 0.0;
  double se_r = 0.0;        // standard error over seeds
  std::size_t n_seeds = 0;  // seeds with a defined correlation
};

// Mean and standard error of pearson_r per (estimator, param) over seeds;
// undefined (NaN) seeds are excluded and reflected in n_seeds.
inline std::vector<StudySummaryRow> summarize_study(
    const std::vector<CorrelationReport>& reports) {
  struct Group {
    std::string estimator;
    double param;
    std::vector<double> rs;
  };
  std::map<std::string, std::size_t> index;  // key -> slot in groups
  std::vector<Group> groups;
  for (const CorrelationReport& r : reports) {
    const std::string key = r.estimator + "|" + format_double(r.param);
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({r.estimator, r.param, {}});
    if (std::isfinite(r.pearson_r)) groups[it->second].rs.push_back(r.pearson_r);
  }
  std::vector<StudySummaryRow> out;
  for (const Group& g : groups) {
    const std::vector<double>& rs = g.rs;
    StudySummaryRow row;
    row.estimator = g.estimator;
    row.param = g.param;
    row.n_seeds = rs.size();
    if (!rs.empty()) {
      double mean = 0.0;
      for (double r : rs) mean += r;
      mean /= static_cast<double>(rs.size());
      row.mean_r = mean;
      if (rs.size() >= 2) {
        double var = 0.0;
        for (double r : rs) var += (r - mean) * (r - mean);
        var /= static_cast<double>(rs.size() - 1);
        row.se_r = std::sqrt(var / static_cast<double>(rs.size()));
      }
    } else {
      row.mean_r = std::numeric_limits<double>::quiet_NaN();
      row.se_r = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace segadv
