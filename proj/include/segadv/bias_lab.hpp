#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segadv/rng.hpp"
#include "segadv/sae.hpp"

namespace segadv {

enum class SignPattern { WorstCase, Random, Alternating };

inline std::string to_string(SignPattern p) {
  switch (p) {
    case SignPattern::WorstCase: return "worst_case";
    case SignPattern::Random: return "random";
    case SignPattern::Alternating: return "alternating";
  }
  return "?";
}

// Synthetic value-error envelope |eps(s_t)| <= alpha * exp((T-t)/beta) with
// eps(s_T) = 0 pinned.
struct ValueErrorModel {
  double alpha = 1.0;
  double beta = 8.0;
  SignPattern pattern = SignPattern::WorstCase;
  std::uint64_t seed = 0;

  void validate() const {
    require(alpha > 0.0, "alpha must be positive");
    require(beta > 0.0, "beta must be positive");
  }
};

// Closed-form upper bound on |A_0 bias| under uniform segmentation:
// alpha * exp(T/beta) * [1 + (1-lambda) / (exp(M/beta) - lambda)].
inline double bias_bound(double alpha, double beta, std::size_t T, std::size_t M,
                         double lambda) {
  require(alpha > 0.0, "alpha must be positive");
  require(beta > 0.0, "beta must be positive");
  require(M >= 1, "M must be >= 1");
  require(T >= 1 && T % M == 0, "M must divide T exactly");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  const double envelope = alpha * std::exp(static_cast<double>(T) / beta);
  const double bracket =
      1.0 + (1.0 - lambda) / (std::exp(static_cast<double>(M) / beta) - lambda);
  return envelope * bracket;
}

// Error sequence of length T+1 respecting the envelope.
//  - WorstCase: full magnitude everywhere, eps(s_0) negative and all later
//    states positive, the sign choice that makes the telescoped bias attain
//    its triangle-inequality value at every boundary state.
//  - Random: magnitude and sign drawn uniformly per state (seeded).
//  - Alternating: full magnitude with sign (-1)^t.
inline std::vector<double> sample_errors(const ValueErrorModel& model, std::size_t T) {
  model.validate();
  require(T >= 1, "T must be >= 1");
  std::vector<double> eps(T + 1, 0.0);
  Rng rng(derive_seed(model.seed, 0xe44));
  for (std::size_t t = 0; t < T; ++t) {
    const double envelope =
        model.alpha * std::exp(static_cast<double>(T - t) / model.beta);
    switch (model.pattern) {
      case SignPattern::WorstCase:
        eps[t] = (t == 0) ? -envelope : envelope;
        break;
      case SignPattern::Random:
        eps[t] = rng.uniform(-1.0, 1.0) * envelope;
        break;
      case SignPattern::Alternating:
        eps[t] = ((t % 2 == 0) ? 1.0 : -1.0) * envelope;
        break;
    }
  }
  eps[T] = 0.0;
  return eps;
}

// Adjacent differences of an arbitrary value sequence (the lab's values are
// synthetic, so there is no trajectory to align against).
inline DeltaSeries value_deltas(std::span<const double> values) {
  require(values.size() >= 2, "value sequence must have at least two entries");
  DeltaSeries out;
  out.deltas.resize(values.size() - 1);
  for (std::size_t t = 0; t + 1 < values.size(); ++t) {
    out.deltas[t] = values[t + 1] - values[t];
  }
  return out;
}

// A_0 of the segmental estimator over a raw value sequence.
inline double sae_a0(std::span<const double> values, const BoundarySet& boundaries,
                     double lambda) {
  const std::size_t T = values.size() - 1;
  const LambdaSchedule sched = lambda_schedule(boundaries, lambda, T);
  return sae_recursive(value_deltas(values), sched).advantages.front();
}

// The telescoped closed form of the A_0 bias under uniform segmentation:
// -eps(s_0) + sum_{k=1}^{T/M - 1} lambda^{k-1} (1-lambda) eps(s_{kM}).
// Exact (an algebraic identity), independent of the true values.
inline double telescoped_bias(std::span<const double> eps, std::size_t M,
                              double lambda) {
  const std::size_t T = eps.size() - 1;
  require(M >= 1 && T % M == 0, "M must divide T exactly");
  double acc = -eps[0];
  double w = 1.0 - lambda;  // lambda^{k-1} (1-lambda) at k = 1
  for (std::size_t k = 1; k * M < T; ++k) {
    acc += w * eps[k * M];
    w *= lambda;
  }
  return acc;
}

struct BiasReport {
  std::size_t T = 0;
  std::size_t M = 0;
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double empirical_bias = 0.0;
  double bound = 0.0;
};

// Measures A_0 bias of SAE under uniform segmentation: builds V = V* + eps,
// evaluates A_0 with noisy and true values, and checks the difference against
// the closed-form bound. A bound violation is an implementation bug, not bad
// input, hence logic_error.
inline BiasReport empirical_bias(std::size_t T, std::size_t M, double lambda,
                                 const ValueErrorModel& model,
                                 const std::vector<double>& true_values) {
  require(T >= 1 && M >= 1 && T % M == 0, "M must divide T exactly");
  require(true_values.size() == T + 1, "true value sequence must have T + 1 entries");
  const std::vector<double> eps = sample_errors(model, T);
  std::vector<double> noisy(true_values);
  for (std::size_t t = 0; t <= T; ++t) noisy[t] += eps[t];

  const BoundarySet boundaries = segment_uniform(T, M);
  const double a0_noisy = sae_a0(noisy, boundaries, lambda);
  const double a0_true = sae_a0(true_values, boundaries, lambda);

  BiasReport report;
  report.T = T;
  report.M = M;
  report.lambda = lambda;
  report.alpha = model.alpha;
  report.beta = model.beta;
  report.empirical_bias = a0_noisy - a0_true;
  report.bound = bias_bound(model.alpha, model.beta, T, M, lambda);
  if (std::abs(report.empirical_bias) > report.bound + 1e-9) {
    throw std::logic_error("empirical bias exceeds the closed-form bound");
  }
  return report;
}

// Default synthetic true values: zero everywhere with terminal 1. Any fixed
// sequence works because the bias depends only on the error term.
inline std::vector<double> default_true_values(std::size_t T) {
  std::vector<double> v(T + 1, 0.0);
  v[T] = 1.0;
  return v;
}

struct BiasGridRow {
  BiasReport report;
  SignPattern pattern = SignPattern::WorstCase;
  std::uint64_t seed = 0;
  double slack = 0.0;  // bound - |bias|
};

struct BiasGridSpec {
  std::vector<std::size_t> T_values{24};
  std::vector<std::size_t> M_values{1, 2, 3, 4, 6, 8, 12, 24};
  std::vector<double> lambda_values{0.5, 0.9, 0.99};
  std::vector<double> alpha_values{1.0};
  std::vector<double> beta_values{4.0, 8.0, 16.0};
  std::vector<SignPattern> patterns{SignPattern::WorstCase, SignPattern::Random,
                                    SignPattern::Alternating};
  std::size_t seeds = 200;

  void validate() const {
    require(!T_values.empty() && !M_values.empty() && !lambda_values.empty() &&
                !alpha_values.empty() && !beta_values.empty() && !patterns.empty(),
            "bias grid axes must be non-empty");
    require(seeds >= 1, "bias grid needs at least one seed");
    for (std::size_t T : T_values)
      for (std::size_t M : M_values)
        require(M >= 1 && T % M == 0, "every M in the grid must divide every T");
  }
};

// Evaluates the full grid. Each configuration owns its seeded random source,
// so results are identical regardless of execution order or thread count.
inline std::vector<BiasGridRow> run_bias_grid(const BiasGridSpec& spec,
                                              std::uint64_t root_seed,
                                              std::size_t threads = 1) {
  spec.validate();
  struct Cell {
    std::size_t T, M;
    double lambda, alpha, beta;
    SignPattern pattern;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t T : spec.T_values)
    for (std::size_t M : spec.M_values)
      for (double lambda : spec.lambda_values)
        for (double alpha : spec.alpha_values)
          for (double beta : spec.beta_values)
            for (SignPattern pattern : spec.patterns)
              for (std::uint64_t s = 0; s < spec.seeds; ++s)
                cells.push_back({T, M, lambda, alpha, beta, pattern, s});

  std::vector<BiasGridRow> rows(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    ValueErrorModel model{c.alpha, c.beta, c.pattern, derive_seed(root_seed, c.seed)};
    BiasGridRow row;
    row.report = empirical_bias(c.T, c.M, c.lambda, model, default_true_values(c.T));
    row.pattern = c.pattern;
    row.seed = c.seed;
    row.slack = row.report.bound - std::abs(row.report.empirical_bias);
    rows[i] = row;
  });
  return rows;
}

// Per-step bias surface A_t(noisy) - A_t(true) for one configuration;
// supplementary output, no bound is asserted away from t = 0.
inline std::vector<double> per_step_bias(std::size_t T, std::size_t M, double lambda,
                                         const ValueErrorModel& model,
                                         const std::vector<double>& true_values) {
  require(T >= 1 && M >= 1 && T % M == 0, "M must divide T exactly");
  require(true_values.size() == T + 1, "true value sequence must have T + 1 entries");
  const std::vector<double> eps = sample_errors(model, T);
  std::vector<double> noisy(true_values);
  for (std::size_t t = 0; t <= T; ++t) noisy[t] += eps[t];
  const BoundarySet boundaries = segment_uniform(T, M);
  const LambdaSchedule sched = lambda_schedule(boundaries, lambda, T);
  const AdvantageSeries a_noisy = sae_recursive(value_deltas(noisy), sched);
  const AdvantageSeries a_true = sae_recursive(value_deltas(true_values), sched);
  std::vector<double> out(T);
  for (std::size_t t = 0; t < T; ++t)
    out[t] = a_noisy.advantages[t] - a_true.advantages[t];
  return out;
}

}  // namespace segadv
