#include <gtest/gtest.h>

#include <cmath>

#include "mailab/mailab.hpp"
#include "oracles.hpp"

using namespace mailab;

namespace {

MarkovGame two_by_two(double reward_scale = 1.0) {
  // s0 -> s1 on (a2,a1), else stay; s1 absorbing.
  std::vector<double> T(2 * 4 * 2, 0.0);
  for (std::size_t a = 0; a < 4; ++a) {
    T[(0 * 4 + a) * 2 + (a == 2 ? 1 : 0)] = 1.0;
    T[(1 * 4 + a) * 2 + 1] = 1.0;
  }
  std::vector<double> r(2 * 2 * 4, 0.0);
  r[0 * 8 + 1 * 4 + 3] = reward_scale;
  r[1 * 8 + 1 * 4 + 0] = 0.5;
  return MarkovGame(3, {"s0", "s1"}, {{"a1", "a2"}, {"a1", "a2"}}, {1.0, 0.0}, T, r);
}

Fixture small_random(std::uint64_t seed, std::size_t agents = 2) {
  RandomGameSpec spec;
  spec.num_states = 3;
  spec.num_agents = agents;
  spec.actions_per_agent = 2;
  spec.horizon = 3;
  return random_mg(spec, seed);
}

}  // namespace

TEST(JointActionSpace, RowMajorAgentZeroMostSignificant) {
  JointActionSpace J({3, 3});
  EXPECT_EQ(J.size(), 9u);
  const std::vector<std::size_t> a2a1{1, 0};
  EXPECT_EQ(J.encode(a2a1), 3u);
  const std::vector<std::size_t> a3a3{2, 2};
  EXPECT_EQ(J.encode(a3a3), 8u);
  EXPECT_EQ(J.own(3, 0), 1u);
  EXPECT_EQ(J.own(3, 1), 0u);
  EXPECT_EQ(J.with_own(0, 0, 1), 3u);
  for (std::size_t a = 0; a < 9; ++a) EXPECT_EQ(J.encode(J.decode(a)), a);
}

TEST(JointActionSpace, MatchesIndependentDigitDecoding) {
  const auto g = small_random(5, 3);
  for (std::size_t a = 0; a < g.game.num_joint_actions(); ++a) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(g.game.joint_space().own(a, i), oracle::own_action(g.game, a, i));
      EXPECT_EQ(g.game.joint_space().with_own(a, i, 1), oracle::replace_own(g.game, a, i, 1));
    }
  }
}

TEST(MarkovGame, ValidGameHasNoViolations) {
  EXPECT_TRUE(validate_game(two_by_two()).ok());
}

TEST(MarkovGame, ShapeMismatchThrows) {
  EXPECT_THROW(MarkovGame(1, {"s"}, {{"a"}}, {1.0}, {1.0, 0.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(MarkovGame(0, {"s"}, {{"a"}}, {1.0}, {1.0}, {0.0}), std::invalid_argument);
}

TEST(MarkovGame, ValidationReportsEachViolation) {
  const auto g = two_by_two(1.5);
  const auto rep = validate_game(g);
  ASSERT_FALSE(rep.ok());
  EXPECT_TRUE(validate_game(g, {1.5}).ok());

  const MarkovGame short_row(1, {"s", "t"}, {{"a"}}, {0.5, 0.5}, {0.7, 0.2, 0.0, 1.0}, {0.0, 0.0});
  EXPECT_FALSE(validate_game(short_row).ok());
  const MarkovGame negative(1, {"s", "t"}, {{"a"}}, {0.5, 0.5}, {1.2, -0.2, 0.0, 1.0}, {0.0, 0.0});
  EXPECT_FALSE(validate_game(negative).ok());
  const MarkovGame rho(1, {"s", "t"}, {{"a"}}, {0.6, 0.6}, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0});
  EXPECT_FALSE(validate_game(rho).ok());
}

TEST(MarkovGame, RowSumToleranceIsOneE12) {
  const MarkovGame ok(1, {"s", "t"}, {{"a"}}, {0.5, 0.5 + 5e-13}, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0});
  EXPECT_TRUE(validate_game(ok).ok());
  const MarkovGame off(1, {"s", "t"}, {{"a"}}, {0.5, 0.5 + 1e-11}, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0});
  EXPECT_FALSE(validate_game(off).ok());
}

TEST(MediatorPolicy, ValidationAndFactories) {
  const auto g = two_by_two();
  const auto u = MediatorPolicy::uniform(g);
  EXPECT_TRUE(validate_policy(g, u).empty());
  const std::vector<std::size_t> choice{3, 0};
  const auto d = MediatorPolicy::deterministic(g, choice);
  EXPECT_DOUBLE_EQ(d.at(0, 3), 1.0);
  MediatorPolicy bad(2, 4, std::vector<double>(8, 0.3));
  EXPECT_FALSE(validate_policy(g, bad).empty());
  EXPECT_FALSE(validate_policy(g, MediatorPolicy(3, 4)).empty());
}

TEST(Deviation, IdentityAndTotality) {
  const auto phi = Deviation::identity(1, 4, 3);
  EXPECT_TRUE(phi.is_identity());
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(phi.apply(0, s, a), a);
  }
  EXPECT_THROW(Deviation::stationary(0, 2, 2, {0, 1, 1}), std::invalid_argument);
  EXPECT_THROW(Deviation::stationary(0, 1, 2, {0, 2}), std::out_of_range);
}

TEST(Deviation, TimeIndexedMapsPerStep) {
  auto phi = Deviation::time_indexed(0, 1, 2, {{0, 1}, {1, 1}});
  EXPECT_EQ(phi.apply(0, 0, 0), 0u);
  EXPECT_EQ(phi.apply(1, 0, 0), 1u);
  EXPECT_FALSE(phi.is_identity());
}

TEST(DeviationClass, ExplicitListsNeedIdentity) {
  const auto g = two_by_two();
  auto swap = Deviation::stationary(0, 2, 2, {1, 0, 1, 0});
  EXPECT_THROW(DeviationClass({std::vector<Deviation>{swap}, std::vector<Deviation>{Deviation::identity(g, 1)}}),
               std::invalid_argument);
  EXPECT_THROW(DeviationClass({std::vector<Deviation>{Deviation::identity(g, 1)}, CompleteDeviations{}}),
               std::invalid_argument);
  const DeviationClass ok({std::vector<Deviation>{Deviation::identity(g, 0), swap}, CompleteDeviations{}});
  EXPECT_FALSE(ok.all_explicit());
  EXPECT_EQ(DeviationClass::swap_class(g).explicit_size(), 2u * 3u);
}

TEST(InducedPolicy, MonteCarloMatchesExactTable) {
  const auto f = small_random(17);
  auto phi = Deviation::stationary(1, 3, 2, {1, 1, 0, 1, 1, 0});
  const auto induced = induced_joint_policy(f.game, f.learner, phi);
  EXPECT_TRUE(validate_policy(f.game, induced).empty());
  Rng rng(99);
  const std::size_t n = 200000;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<double> counts(4, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t a = rng.categorical(f.learner.row(s));
      const std::size_t b = oracle::replace_own(f.game, a, 1, phi.apply(0, s, oracle::own_action(f.game, a, 1)));
      counts[b] += 1.0;
    }
    for (std::size_t a = 0; a < 4; ++a) {
      const double p = induced.at(s, a);
      const double sd = std::sqrt(p * (1 - p) / double(n));
      EXPECT_NEAR(counts[a] / double(n), p, 5.0 * sd + 1e-12);
    }
  }
}

TEST(InducedPolicy, IdentityReturnsSigma) {
  const auto f = small_random(3);
  EXPECT_EQ(induced_joint_policy(f.game, f.learner, Deviation::identity(f.game, 0)), f.learner);
}

TEST(InducedPolicy, PreservesOthersRecommendations) {
  const auto f = small_random(4);
  auto phi = Deviation::stationary(0, 3, 2, {1, 0, 1, 0, 1, 0});
  const auto induced = induced_joint_policy(f.game, f.learner, phi);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(own_marginal(f.game, induced.row(s), 1), own_marginal(f.game, f.learner.row(s), 1));
  }
}

TEST(Sampling, TrajectoryLengthAndValidity) {
  const auto f = small_random(8);
  const auto t = sample_trajectory(f.game, f.expert, std::uint64_t{5});
  ASSERT_EQ(t.steps.size(), f.game.horizon());
  for (const auto& st : t.steps) {
    EXPECT_LT(st.state, 3u);
    EXPECT_LT(st.joint, 4u);
  }
}

TEST(Sampling, SameSeedSameDemonstrations) {
  const auto f = small_random(8);
  const auto a = sample_demonstrations(f.game, f.expert, 20, 11);
  const auto b = sample_demonstrations(f.game, f.expert, 20, 11);
  const auto c = sample_demonstrations(f.game, f.expert, 20, 12);
  EXPECT_EQ(a.trajectories, b.trajectories);
  EXPECT_NE(a.trajectories, c.trajectories);
  EXPECT_EQ(a.seed, 11u);
  EXPECT_THROW(sample_demonstrations(f.game, f.expert, 0, 1), std::invalid_argument);
}

TEST(Sampling, EmpiricalDistributionConvergesToPathOracle) {
  const auto f = small_random(21);
  const auto demos = sample_demonstrations(f.game, f.expert, 40000, 3);
  const auto emp = empirical_step_distributions(f.game, demos);
  const auto exact = oracle::enumerate_paths(f.game, oracle::rows_of(f.expert));
  for (std::size_t h = 0; h < f.game.horizon(); ++h) {
    for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(emp[h][s], exact.d_step[h][s], 0.01);
  }
}

TEST(Sampling, DeriveSeedIsStableAndSpreads) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Sampling, RngUniformInUnitInterval) {
  Rng rng(0);
  for (int k = 0; k < 10000; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  const std::vector<double> p{0.0, 1.0, 0.0};
  EXPECT_EQ(rng.categorical(p), 1u);
}
