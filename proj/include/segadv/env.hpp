#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "segadv/rng.hpp"
#include "segadv/trajectory.hpp"

namespace segadv {

// Synthetic sparse-terminal-reward token MDP: forced-token corridors
// separated by genuine K-way choices. Layout per episode (fixed length for
// every policy):
//
//   [C corridor tokens][junction 0][C corridor tokens][junction 1]...
//   [junction J-1][C corridor tokens]
//
// so step p is junction j iff p = j*(C+1) + C, and T = J*(C+1) + C.
// Terminal reward is 1 iff every junction choice was correct.
//
// Token ids: 0..K-1 are the junction choice tokens; the corridor token at
// absolute step p is K + p (one corridor token per corridor position).
//
// States are (position, mistake-so-far) pairs, position 0..T; this is the
// minimal sufficient statistic for the exact value function.
struct JunctionEnv {
  std::size_t junctions = 1;      // J >= 1
  std::size_t corridor_len = 0;   // C >= 0 forced tokens around junctions
  std::size_t choices = 2;        // K >= 2
  std::vector<std::int64_t> correct_choice;  // per junction, in [0, K)

  void validate() const {
    require(junctions >= 1, "need at least one junction");
    require(choices >= 2, "need at least two choices per junction");
    require(correct_choice.size() == junctions,
            "correct_choice must have one entry per junction");
    for (std::int64_t c : correct_choice)
      require(c >= 0 && c < static_cast<std::int64_t>(choices),
              "correct choice out of range");
  }

  static JunctionEnv make(std::size_t junctions, std::size_t corridor_len,
                          std::size_t choices, std::uint64_t correct_seed) {
    JunctionEnv env;
    env.junctions = junctions;
    env.corridor_len = corridor_len;
    env.choices = choices;
    Rng rng(derive_seed(correct_seed, 0xc0de));
    env.correct_choice.resize(junctions);
    for (std::size_t j = 0; j < junctions; ++j) {
      env.correct_choice[j] =
          static_cast<std::int64_t>(rng.next_u64() % choices);
    }
    env.validate();
    return env;
  }

  std::size_t horizon() const {
    return junctions * (corridor_len + 1) + corridor_len;
  }

  bool is_junction_step(std::size_t pos) const {
    return pos < junctions * (corridor_len + 1) &&
           pos % (corridor_len + 1) == corridor_len;
  }

  std::size_t junction_index_at(std::size_t pos) const {
    return pos / (corridor_len + 1);
  }

  std::int64_t corridor_token(std::size_t pos) const {
    return static_cast<std::int64_t>(choices + pos);
  }

  // State ids enumerate (position, mistake flag) pairs.
  std::size_t num_states() const { return (horizon() + 1) * 2; }

  static std::size_t state_id(std::size_t pos, bool mistake) {
    return pos * 2 + (mistake ? 1 : 0);
  }

  static std::size_t state_pos(std::size_t id) { return id / 2; }
  static bool state_mistake(std::size_t id) { return (id % 2) != 0; }
};

// Tabular policy: one categorical (softmax over logits) per junction.
// Corridor steps emit the single legal token with probability exactly 1.
struct TabularPolicy {
  std::size_t junctions = 0;
  std::size_t choices = 0;
  std::vector<double> logits;  // junctions x choices, row-major

  static TabularPolicy uniform(std::size_t junctions, std::size_t choices) {
    TabularPolicy p;
    p.junctions = junctions;
    p.choices = choices;
    p.logits.assign(junctions * choices, 0.0);
    return p;
  }

  // Every junction assigns probability q to its correct choice and splits the
  // remainder evenly; handy for constructing partially-trained policies.
  static TabularPolicy with_correct_prob(const JunctionEnv& env, double q) {
    require(q > 0.0 && q < 1.0, "correct-choice probability must lie in (0, 1)");
    TabularPolicy p = uniform(env.junctions, env.choices);
    const double rest = (1.0 - q) / static_cast<double>(env.choices - 1);
    for (std::size_t j = 0; j < env.junctions; ++j) {
      for (std::size_t a = 0; a < env.choices; ++a) {
        const bool correct =
            static_cast<std::int64_t>(a) == env.correct_choice[j];
        p.logits[j * env.choices + a] = std::log(correct ? q : rest);
      }
    }
    return p;
  }

  std::vector<double> probs_at(std::size_t junction) const {
    std::vector<double> out(choices);
    const double* row = logits.data() + junction * choices;
    double mx = row[0];
    for (std::size_t a = 1; a < choices; ++a) mx = std::max(mx, row[a]);
    double z = 0.0;
    for (std::size_t a = 0; a < choices; ++a) {
      out[a] = std::exp(row[a] - mx);
      z += out[a];
    }
    for (double& v : out) v /= z;
    return out;
  }

  void validate() const {
    require(logits.size() == junctions * choices, "logit table shape mismatch");
    for (double l : logits) require_finite(l, "policy logit");
    for (std::size_t j = 0; j < junctions; ++j) {
      const auto probs = probs_at(j);
      double sum = 0.0;
      for (double p : probs) sum += p;
      require(std::abs(sum - 1.0) <= 1e-12, "junction distribution must sum to 1");
    }
  }

  double entropy() const {
    double acc = 0.0;
    for (std::size_t j = 0; j < junctions; ++j) {
      for (double p : probs_at(j)) {
        if (p > 0.0) acc -= p * std::log(p);
      }
    }
    return acc / static_cast<double>(junctions);
  }
};

// One sampled episode plus the visited state ids s_0..s_T.
struct Rollout {
  Trajectory traj;
  std::vector<std::size_t> state_ids;
};

namespace detail {

// Advances one episode from (pos, mistake); records tokens/probs if sink is
// non-null. Returns the terminal reward.
inline double play_out(const JunctionEnv& env, const TabularPolicy& policy,
                       std::size_t start_pos, bool start_mistake, Rng& rng,
                       Rollout* sink) {
  const std::size_t T = env.horizon();
  bool mistake = start_mistake;
  if (sink) {
    sink->state_ids.push_back(JunctionEnv::state_id(start_pos, mistake));
  }
  for (std::size_t pos = start_pos; pos < T; ++pos) {
    if (env.is_junction_step(pos)) {
      const std::size_t j = env.junction_index_at(pos);
      const auto probs = policy.probs_at(j);
      const std::size_t a = rng.categorical(probs);
      mistake = mistake || (static_cast<std::int64_t>(a) != env.correct_choice[j]);
      if (sink) {
        sink->traj.tokens.push_back(static_cast<std::int64_t>(a));
        sink->traj.gen_probs.push_back(probs[a]);
      }
    } else {
      if (sink) {
        sink->traj.tokens.push_back(env.corridor_token(pos));
        sink->traj.gen_probs.push_back(1.0);
      }
    }
    if (sink) sink->state_ids.push_back(JunctionEnv::state_id(pos + 1, mistake));
  }
  return mistake ? 0.0 : 1.0;
}

}  // namespace detail

inline Rollout rollout(const JunctionEnv& env, const TabularPolicy& policy,
                       Rng& rng) {
  env.validate();
  Rollout out;
  out.traj.tokens.reserve(env.horizon());
  out.traj.gen_probs.reserve(env.horizon());
  out.state_ids.reserve(env.horizon() + 1);
  out.traj.terminal_reward = detail::play_out(env, policy, 0, false, rng, &out);
  return out;
}

// Exact state values by backward dynamic programming, indexed by state id:
// V*(pos, mistake) = 0 once a mistake happened, else the product of the
// correct-choice probabilities of the junctions at or after pos.
inline std::vector<double> exact_values(const JunctionEnv& env,
                                        const TabularPolicy& policy) {
  env.validate();
  const std::size_t T = env.horizon();
  std::vector<double> v(env.num_states(), 0.0);
  v[JunctionEnv::state_id(T, false)] = 1.0;
  for (std::size_t pos = T; pos-- > 0;) {
    double next = v[JunctionEnv::state_id(pos + 1, false)];
    if (env.is_junction_step(pos)) {
      const std::size_t j = env.junction_index_at(pos);
      next *= policy.probs_at(j)[static_cast<std::size_t>(env.correct_choice[j])];
    }
    v[JunctionEnv::state_id(pos, false)] = next;
  }
  return v;
}

struct McValue {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo value of a state: mean terminal reward over n independent
// continuations, with the binomial standard error.
inline McValue mc_value(const JunctionEnv& env, const TabularPolicy& policy,
                        std::size_t pos, bool mistake, std::size_t n_rollouts,
                        std::uint64_t seed) {
  env.validate();
  require(pos <= env.horizon(), "state position out of range");
  require(n_rollouts >= 1, "need at least one rollout");
  Rng rng(derive_seed(seed, JunctionEnv::state_id(pos, mistake)));
  double successes = 0.0;
  for (std::size_t i = 0; i < n_rollouts; ++i) {
    successes += detail::play_out(env, policy, pos, mistake, rng, nullptr);
  }
  McValue out;
  const double n = static_cast<double>(n_rollouts);
  out.mean = successes / n;
  out.std_error = std::sqrt(out.mean * (1.0 - out.mean) / n);
  return out;
}

}  // namespace segadv
