#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "segadv/trajectory.hpp"

namespace segadv {

enum class SegMethod { Probability, Uniform, Delimiter };

struct SegmentationConfig {
  SegMethod method = SegMethod::Probability;
  double p = 0.2;                         // probability threshold
  std::size_t uniform_len = 1;            // M, fixed segment length
  std::vector<std::int64_t> delimiters;   // token ids that close a segment

  void validate() const {
    switch (method) {
      case SegMethod::Probability:
        require(p > 0.0 && p <= 1.0, "segmentation threshold p must lie in (0, 1]");
        break;
      case SegMethod::Uniform:
        require(uniform_len >= 1, "uniform segment length M must be >= 1");
        break;
      case SegMethod::Delimiter:
        require(!delimiters.empty(), "delimiter segmentation needs a non-empty token set");
        break;
    }
  }
};

// Ordered segment-boundary positions for one trajectory. Positions are state
// indices in [1, T], strictly increasing, and always end with T.
struct BoundarySet {
  std::vector<std::size_t> positions;
  std::size_t T = 0;

  std::size_t count() const { return positions.size(); }

  bool contains(std::size_t u) const {
    return std::binary_search(positions.begin(), positions.end(), u);
  }

  void validate() const {
    require(T >= 1, "boundary set needs T >= 1");
    require(!positions.empty(), "boundary set must contain at least the terminal position");
    require(positions.back() == T, "boundary set must end with the terminal position T");
    std::size_t prev = 0;
    for (std::size_t u : positions) {
      require(u >= 1 && u <= T, "boundary positions must lie in [1, T]");
      require(u > prev, "boundary positions must be strictly increasing");
      prev = u;
    }
  }
};

// Position u is a boundary iff the token emitted at step u-1 had generation
// probability strictly below p. T is always a boundary.
inline BoundarySet segment_probability(const Trajectory& traj, double p) {
  require(p > 0.0 && p <= 1.0, "segmentation threshold p must lie in (0, 1]");
  const std::size_t T = traj.length();
  BoundarySet out;
  out.T = T;
  for (std::size_t u = 1; u <= T; ++u) {
    if (traj.gen_probs[u - 1] < p) out.positions.push_back(u);
  }
  if (out.positions.empty() || out.positions.back() != T) out.positions.push_back(T);
  return out;
}

// Boundaries at M, 2M, ... plus T. When M does not divide T the final
// partial segment ends at T.
inline BoundarySet segment_uniform(std::size_t T, std::size_t M) {
  require(T >= 1, "T must be >= 1");
  require(M >= 1, "M must be >= 1");
  BoundarySet out;
  out.T = T;
  for (std::size_t u = M; u <= T; u += M) out.positions.push_back(u);
  if (out.positions.empty() || out.positions.back() != T) out.positions.push_back(T);
  return out;
}

// Position u is a boundary iff the token emitted at step u-1 is a delimiter.
inline BoundarySet segment_delimiter(const Trajectory& traj,
                                     std::span<const std::int64_t> delimiters) {
  require(!delimiters.empty(), "delimiter segmentation needs a non-empty token set");
  const std::size_t T = traj.length();
  BoundarySet out;
  out.T = T;
  for (std::size_t u = 1; u <= T; ++u) {
    if (std::find(delimiters.begin(), delimiters.end(), traj.tokens[u - 1]) !=
        delimiters.end()) {
      out.positions.push_back(u);
    }
  }
  if (out.positions.empty() || out.positions.back() != T) out.positions.push_back(T);
  return out;
}

inline BoundarySet segment(const Trajectory& traj, const SegmentationConfig& cfg) {
  cfg.validate();
  switch (cfg.method) {
    case SegMethod::Probability:
      return segment_probability(traj, cfg.p);
    case SegMethod::Uniform:
      return segment_uniform(traj.length(), cfg.uniform_len);
    case SegMethod::Delimiter:
      return segment_delimiter(traj, cfg.delimiters);
  }
  throw ValidationError("unknown segmentation method");
}

// Mean tokens-per-segment over a collection of boundary sets.
inline double avg_segment_length(std::span<const BoundarySet> sets) {
  require(!sets.empty(), "avg_segment_length needs at least one boundary set");
  double acc = 0.0;
  for (const BoundarySet& b : sets) {
    b.validate();
    acc += static_cast<double>(b.T) / static_cast<double>(b.count());
  }
  return acc / static_cast<double>(sets.size());
}

}  // namespace segadv
