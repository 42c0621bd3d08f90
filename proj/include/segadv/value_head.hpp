#pragma once

#include <vector>

#include "segadv/env.hpp"
#include "segadv/trajectory.hpp"

namespace segadv {

// Learned critic over (position bucket, mistake flag) features, trained by
// regression to empirical terminal returns. bucket_width = 1 with the flag
// enabled is a full tabular critic that can represent the exact values;
// wider buckets coarsen positions, and disabling the flag merges doomed and
// live states. Both induce realistic value error, which is the regime where
// the choice of advantage estimator matters.
class ValueHead {
 public:
  ValueHead(std::size_t horizon, std::size_t bucket_width, bool use_mistake_flag = true)
      : horizon_(horizon),
        bucket_width_(bucket_width),
        use_mistake_flag_(use_mistake_flag) {
    require(horizon >= 1, "horizon must be >= 1");
    require(bucket_width >= 1, "bucket width must be >= 1");
    n_buckets_ = horizon / bucket_width + 1;
    table_.assign(n_buckets_ * 2, 0.0);
  }

  std::size_t bucket_width() const { return bucket_width_; }
  bool use_mistake_flag() const { return use_mistake_flag_; }

  double predict(std::size_t pos, bool mistake) const {
    return table_[slot(pos, mistake)];
  }

  // One regression pass toward the terminal return at every non-terminal
  // state visit in the batch: each bucket moves by lr times its mean
  // residual. The terminal state is never regressed.
  void regress(const std::vector<Rollout>& batch, double lr) {
    require(lr > 0.0, "critic learning rate must be positive");
    std::vector<double> residual(table_.size(), 0.0);
    std::vector<std::size_t> visits(table_.size(), 0);
    for (const Rollout& r : batch) {
      const double target = r.traj.terminal_reward;
      for (std::size_t i = 0; i + 1 < r.state_ids.size(); ++i) {
        const std::size_t id = r.state_ids[i];
        const std::size_t s =
            slot(JunctionEnv::state_pos(id), JunctionEnv::state_mistake(id));
        residual[s] += target - table_[s];
        ++visits[s];
      }
    }
    for (std::size_t s = 0; s < table_.size(); ++s) {
      if (visits[s] > 0) {
        table_[s] += lr * residual[s] / static_cast<double>(visits[s]);
      }
    }
  }

  // Predictions along a rollout with the terminal entry pinned to the
  // observed reward.
  ValueSeries values_for(const Rollout& r) const {
    ValueSeries out;
    out.values.reserve(r.state_ids.size());
    for (std::size_t id : r.state_ids) {
      out.values.push_back(
          predict(JunctionEnv::state_pos(id), JunctionEnv::state_mistake(id)));
    }
    out.values.back() = r.traj.terminal_reward;
    return out;
  }

  // Mean squared error against the exact values over all non-terminal
  // states (both mistake flags); a training diagnostic.
  double mse_vs(const std::vector<double>& exact, std::size_t horizon) const {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < horizon; ++pos) {
      for (int flag = 0; flag < 2; ++flag) {
        const double d =
            predict(pos, flag != 0) - exact[JunctionEnv::state_id(pos, flag != 0)];
        acc += d * d;
        ++n;
      }
    }
    return acc / static_cast<double>(n);
  }

  const std::vector<double>& table() const { return table_; }

 private:
  std::size_t slot(std::size_t pos, bool mistake) const {
    const std::size_t b = std::min(pos / bucket_width_, n_buckets_ - 1);
    return b * 2 + ((use_mistake_flag_ && mistake) ? 1 : 0);
  }

  std::size_t horizon_ = 0;
  std::size_t bucket_width_ = 1;
  bool use_mistake_flag_ = true;
  std::size_t n_buckets_ = 0;
  std::vector<double> table_;
};

}  // namespace segadv
