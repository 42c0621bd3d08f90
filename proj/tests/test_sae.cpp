#include <catch2/catch_amalgamated.hpp>

#include "segadv/sae.hpp"
#include "test_helpers.hpp"

using namespace segadv;
using Catch::Matchers::WithinAbs;

namespace {

// The worked fixture: values [0.5, 0.4, 0.6, 0.3, 1.0], reward 1,
// boundaries {2, 4}, lambda 0.5 -> A = [0.3, 0.4, 0.4, 0.7].
struct Fixture {
  ValueSeries values{{0.5, 0.4, 0.6, 0.3, 1.0}};
  BoundarySet boundaries{{2, 4}, 4};
  double lambda = 0.5;
  DeltaSeries deltas{{-0.1, 0.2, -0.3, 0.7}};
};

}  // namespace

TEST_CASE("lambda_schedule marks boundary crossings with lambda", "[sae]") {
  const BoundarySet b{{2, 4}, 4};
  const LambdaSchedule s = lambda_schedule(b, 0.5, 4);
  CHECK(s.factors == std::vector<double>{1.0, 0.5, 1.0, 0.5});

  const BoundarySet all{{1, 2, 3}, 3};
  CHECK(lambda_schedule(all, 0.25, 3).factors ==
        std::vector<double>{0.25, 0.25, 0.25});

  const BoundarySet terminal_only{{5}, 5};
  CHECK(lambda_schedule(terminal_only, 0.25, 5).factors ==
        std::vector<double>{1, 1, 1, 1, 0.25});

  BoundarySet bad{{2, 6}, 4};
  CHECK_THROWS_AS(lambda_schedule(bad, 0.5, 4), ValidationError);

  // Every factor is either 1 or lambda, and the terminal factor is lambda.
  Rng rng(91);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t T = 1 + rng.next_u64() % 64;
    const double lambda = rng.uniform01();
    const BoundarySet rb = segadv::testing::random_boundaries(T, rng);
    const LambdaSchedule s = lambda_schedule(rb, lambda, T);
    for (double f : s.factors) {
      REQUIRE((f == 1.0 || f == lambda));
    }
    REQUIRE(s.factors.back() == lambda);
  }
}

TEST_CASE("sae_recursive reproduces the worked example", "[sae]") {
  Fixture f;
  const LambdaSchedule s = lambda_schedule(f.boundaries, f.lambda, 4);
  const AdvantageSeries a = sae_recursive(f.deltas, s);
  REQUIRE(a.advantages.size() == 4);
  CHECK_THAT(a.advantages[0], WithinAbs(0.3, 1e-12));
  CHECK_THAT(a.advantages[1], WithinAbs(0.4, 1e-12));
  CHECK_THAT(a.advantages[2], WithinAbs(0.4, 1e-12));
  CHECK_THAT(a.advantages[3], WithinAbs(0.7, 1e-12));
}

TEST_CASE("sae_boundary_form reproduces the worked example and A_0 identity",
          "[sae]") {
  Fixture f;
  const AdvantageSeries a =
      reference::sae_boundary_form(f.values, f.boundaries, f.lambda);
  CHECK_THAT(a.advantages[0], WithinAbs(0.3, 1e-12));
  CHECK_THAT(a.advantages[1], WithinAbs(0.4, 1e-12));
  CHECK_THAT(a.advantages[2], WithinAbs(0.4, 1e-12));
  CHECK_THAT(a.advantages[3], WithinAbs(0.7, 1e-12));
  // A_0 = 0.5*(V(s_2) - V(s_0)) + 0.5*(V(s_4) - V(s_0))
  const double direct = 0.5 * (0.6 - 0.5) + 0.5 * (1.0 - 0.5);
  CHECK_THAT(a.advantages[0], WithinAbs(direct, 1e-15));
}

TEST_CASE("terminal-only boundaries collapse the boundary form to V(s_T) - V(s_t)",
          "[sae]") {
  const ValueSeries v{{0.1, 0.7, -0.2, 0.4, 1.0}};
  const BoundarySet b{{4}, 4};
  for (double lambda : {0.0, 0.3, 0.9}) {
    const AdvantageSeries a = reference::sae_boundary_form(v, b, lambda);
    for (std::size_t t = 0; t < 4; ++t) {
      REQUIRE_THAT(a.advantages[t], WithinAbs(1.0 - v.values[t], 1e-15));
    }
  }
}

TEST_CASE("lambda = 1 kills interior terms regardless of boundaries", "[sae]") {
  Rng rng(5);
  const std::size_t T = 17;
  const auto vals = segadv::testing::random_values(T, rng, 1.0);
  const BoundarySet b = segadv::testing::random_boundaries(T, rng);
  const AdvantageSeries a =
      reference::sae_boundary_form(ValueSeries{vals}, b, 1.0);
  for (std::size_t t = 0; t < T; ++t) {
    REQUIRE_THAT(a.advantages[t], WithinAbs(vals[T] - vals[t], 1e-12));
  }
}

TEST_CASE("sae_product_form worked example and single-delta propagation", "[sae]") {
  Fixture f;
  const LambdaSchedule s = lambda_schedule(f.boundaries, f.lambda, 4);
  const AdvantageSeries a = reference::sae_product_form(f.deltas, s);
  CHECK_THAT(a.advantages[0], WithinAbs(0.3, 1e-12));
  CHECK_THAT(a.advantages[1], WithinAbs(0.4, 1e-12));
  CHECK_THAT(a.advantages[2], WithinAbs(0.4, 1e-12));
  CHECK_THAT(a.advantages[3], WithinAbs(0.7, 1e-12));

  // Single nonzero delta_{T-1}: A_t is the product of factors from t to T-2.
  const std::size_t T = 6;
  DeltaSeries d{std::vector<double>(T, 0.0)};
  d.deltas[T - 1] = 1.0;
  LambdaSchedule sched{{0.5, 1.0, 0.25, 1.0, 0.5, 0.125}};
  const AdvantageSeries one = reference::sae_product_form(d, sched);
  for (std::size_t t = 0; t < T; ++t) {
    double prod = 1.0;
    for (std::size_t i = t; i + 1 < T; ++i) prod *= sched.factors[i];
    REQUIRE_THAT(one.advantages[t], WithinAbs(prod, 1e-15));
  }

  // All-ones schedule except the terminal entry: suffix sums.
  DeltaSeries d2{{0.3, -0.2, 0.5, 0.1}};
  LambdaSchedule s2{{1.0, 1.0, 1.0, 0.5}};
  const auto suffix = segadv::testing::suffix_sums(d2.deltas);
  const AdvantageSeries a2 = reference::sae_product_form(d2, s2);
  for (std::size_t t = 0; t < 4; ++t) {
    REQUIRE_THAT(a2.advantages[t], WithinAbs(suffix[t], 1e-15));
  }
}

TEST_CASE("three SAE formulations agree on randomized cases", "[sae]") {
  Rng rng(42);
  const std::vector<double> lambdas{0.0, 0.3, 0.7, 0.95, 1.0};
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t T = 1 + rng.next_u64() % 128;
    const double reward = rng.uniform01() < 0.5 ? 1.0 : 0.0;
    const auto vals = segadv::testing::random_values(T, rng, reward);
    const BoundarySet b = segadv::testing::random_boundaries(T, rng);
    const double lambda = lambdas[rng.next_u64() % lambdas.size()];
    const LambdaSchedule sched = lambda_schedule(b, lambda, T);
    const DeltaSeries d = [&] {
      DeltaSeries out;
      out.deltas.resize(T);
      for (std::size_t t = 0; t < T; ++t) out.deltas[t] = vals[t + 1] - vals[t];
      return out;
    }();
    const auto rec = sae_recursive(d, sched);
    const auto prod = reference::sae_product_form(d, sched);
    const auto bound = reference::sae_boundary_form(ValueSeries{vals}, b, lambda);
    REQUIRE(segadv::testing::max_abs_diff(rec.advantages, prod.advantages) <= 1e-9);
    REQUIRE(segadv::testing::max_abs_diff(rec.advantages, bound.advantages) <= 1e-9);
  }
}

TEST_CASE("coefficient on delta_{t+l} is lambda^(boundaries crossed)", "[sae]") {
  Rng rng(77);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t T = 2 + rng.next_u64() % 32;
    const BoundarySet b = segadv::testing::random_boundaries(T, rng);
    const double lambda = rng.uniform01();
    const LambdaSchedule sched = lambda_schedule(b, lambda, T);
    const std::size_t t = rng.next_u64() % T;
    const std::size_t l = rng.next_u64() % (T - t);
    // Unit impulse at t+l exposes the coefficient.
    DeltaSeries d{std::vector<double>(T, 0.0)};
    d.deltas[t + l] = 1.0;
    const double coeff =
        reference::sae_product_form(d, sched).advantages[t];
    std::size_t crossings = 0;
    for (std::size_t i = 1; i <= l; ++i) {
      if (b.contains(t + i)) ++crossings;
    }
    REQUIRE_THAT(coeff, WithinAbs(std::pow(lambda, static_cast<double>(crossings)),
                                  1e-12));
  }
}

TEST_CASE("degeneracies: all-boundaries is GAE, terminal-only and lambda=1 are MC",
          "[sae]") {
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t T = 1 + rng.next_u64() % 64;
    DeltaSeries d{std::vector<double>(T)};
    for (double& x : d.deltas) x = rng.uniform(-1.0, 1.0);
    const double lambda = rng.uniform01();

    BoundarySet all;
    all.T = T;
    for (std::size_t u = 1; u <= T; ++u) all.positions.push_back(u);
    CHECK(sae_recursive(d, lambda_schedule(all, lambda, T)).advantages ==
          gae(d, lambda).advantages);

    const BoundarySet term{{T}, T};
    CHECK(sae_recursive(d, lambda_schedule(term, lambda, T)).advantages ==
          mc_advantage(d).advantages);

    const BoundarySet b = segadv::testing::random_boundaries(T, rng);
    CHECK(sae_recursive(d, lambda_schedule(b, 1.0, T)).advantages ==
          mc_advantage(d).advantages);

    // Uniform M = 1 degenerates to token-level GAE.
    CHECK(sae_recursive(d, lambda_schedule(segment_uniform(T, 1), lambda, T))
              .advantages == gae(d, lambda).advantages);
  }
}

TEST_CASE("the final schedule factor never affects the output", "[sae]") {
  Rng rng(23);
  const std::size_t T = 20;
  DeltaSeries d{std::vector<double>(T)};
  for (double& x : d.deltas) x = rng.uniform(-1.0, 1.0);
  LambdaSchedule s = lambda_schedule(segadv::testing::random_boundaries(T, rng), 0.4, T);
  const auto base = sae_recursive(d, s);
  s.factors[T - 1] = 123.456;
  const auto mutated = sae_recursive(d, s);
  CHECK(base.advantages == mutated.advantages);
}

TEST_CASE("boundary-form bootstrap weights sum to one", "[sae]") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t T = 1 + rng.next_u64() % 32;
    const BoundarySet b = segadv::testing::random_boundaries(T, rng);
    const double lambda = rng.uniform01();
    const auto& pos = b.positions;
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t j = 0;
      while (j < pos.size() && pos[j] <= t) ++j;
      double sum = 0.0;
      double w = 1.0;
      for (std::size_t k = j; k + 1 < pos.size(); ++k) {
        sum += (1.0 - lambda) * w;
        w *= lambda;
      }
      sum += w;  // terminal weight
      REQUIRE_THAT(sum, WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("estimate dispatches to the configured estimator", "[sae]") {
  Trajectory traj;
  traj.tokens = {1, 2, 3};
  traj.gen_probs = {0.9, 0.1, 0.8};
  traj.terminal_reward = 1.0;
  const ValueSeries values{{0.5, 0.4, 0.6, 1.0}};

  EstimatorSpec spec;
  spec.kind = EstimatorKind::Gae;
  spec.lambda = 0.5;
  const auto a = estimate(traj, &values, spec);
  CHECK_THAT(a.advantages[0], WithinAbs(0.1, 1e-15));
  CHECK_THAT(a.advantages[1], WithinAbs(0.4, 1e-15));
  CHECK_THAT(a.advantages[2], WithinAbs(0.4, 1e-15));

  EstimatorSpec mc_spec;
  mc_spec.kind = EstimatorKind::Mc;
  EstimatorSpec gae1;
  gae1.kind = EstimatorKind::Gae;
  gae1.lambda = 1.0;
  CHECK(estimate(traj, &values, mc_spec).advantages ==
        estimate(traj, &values, gae1).advantages);

  // SAE with every token a boundary equals GAE.
  EstimatorSpec sae_spec;
  sae_spec.kind = EstimatorKind::Sae;
  sae_spec.lambda = 0.5;
  sae_spec.segmentation = SegmentationConfig{SegMethod::Probability, 1.0, 1, {}};
  CHECK(estimate(traj, &values, sae_spec).advantages == a.advantages);

  // Missing segmentation for SAE and missing group context for GRPO.
  EstimatorSpec broken = sae_spec;
  broken.segmentation.reset();
  CHECK_THROWS_AS(estimate(traj, &values, broken), ValidationError);

  EstimatorSpec grpo_spec;
  grpo_spec.kind = EstimatorKind::Grpo;
  CHECK_THROWS_AS(estimate(traj, nullptr, grpo_spec), ValidationError);

  GroupContext ctx;
  ctx.rewards = {1.0, 0.0};
  ctx.index = 0;
  ctx.epsilon = 0.0;
  const auto g = estimate(traj, nullptr, grpo_spec, &ctx);
  CHECK(g.advantages == std::vector<double>{1.0, 1.0, 1.0});

  EstimatorSpec need_values;
  need_values.kind = EstimatorKind::Gae;
  CHECK_THROWS_AS(estimate(traj, nullptr, need_values), ValidationError);
}
