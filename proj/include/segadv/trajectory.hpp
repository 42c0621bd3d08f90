#pragma once

#include <cstdint>
#include <vector>

#include "segadv/common.hpp"

namespace segadv {

// One generated episode. Rewards are binary and terminal-only; the discount
// factor is fixed to 1 throughout, so it never appears as a parameter.
// Indexing: action steps run 0..T-1, states 0..T.
struct Trajectory {
  std::vector<std::int64_t> tokens;
  std::vector<double> gen_probs;  // behavior-policy probability of each emitted token
  double terminal_reward = 0.0;   // 0 or 1

  std::size_t length() const { return tokens.size(); }

  void validate() const {
    require(!tokens.empty(), "trajectory must have length >= 1");
    require_aligned(tokens.size() == gen_probs.size(),
                    "tokens and gen_probs must have the same length");
    for (std::int64_t tok : tokens)
      require(tok >= 0, "token ids must be non-negative");
    for (double p : gen_probs) {
      require_finite(p, "gen_prob");
      require(p > 0.0 && p <= 1.0, "gen_probs must lie in (0, 1]");
    }
    require(terminal_reward == 0.0 || terminal_reward == 1.0,
            "terminal_reward must be exactly 0 or 1");
  }
};

// State values V(s_0..s_T) aligned to a trajectory. values[T] is pinned to
// the terminal reward, never predicted.
struct ValueSeries {
  std::vector<double> values;

  void validate_for(const Trajectory& traj) const {
    require_aligned(values.size() == traj.length() + 1,
                    "value series must have trajectory length + 1 entries");
    for (double v : values) require_finite(v, "value");
    require(values.back() == traj.terminal_reward,
            "terminal value must equal the terminal reward exactly");
  }
};

// One-step TD errors, length T. With gamma = 1 and the terminal value pinned,
// delta_t = values[t+1] - values[t] for every t.
struct DeltaSeries {
  std::vector<double> deltas;
};

// Per-action-step advantage estimates, length T.
struct AdvantageSeries {
  std::vector<double> advantages;
};

}  // namespace segadv
