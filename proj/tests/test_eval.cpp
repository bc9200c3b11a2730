#include <gtest/gtest.h>

#include "mailab/mailab.hpp"
#include "oracles.hpp"

using namespace mailab;

namespace {

Fixture tiny(std::uint64_t seed, std::size_t states = 3, std::size_t agents = 2, std::size_t horizon = 3) {
  RandomGameSpec spec;
  spec.num_states = states;
  spec.num_agents = agents;
  spec.actions_per_agent = 2;
  spec.horizon = horizon;
  return random_mg(spec, seed);
}

}  // namespace

TEST(Occupancy, MatchesPathEnumeration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = tiny(seed);
    const auto occ = occupancy_bundle(f.game, f.learner);
    const auto ref = oracle::enumerate_paths(f.game, oracle::rows_of(f.learner));
    for (std::size_t h = 0; h < f.game.horizon(); ++h) {
      for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(occ.d_step[h][s], ref.d_step[h][s], 1e-12);
      for (std::size_t k = 0; k < 12; ++k) EXPECT_NEAR(occ.rho_step[h][k], ref.rho_step[h][k], 1e-12);
    }
  }
}

TEST(Occupancy, BundleInvariants) {
  const auto f = tiny(7, 4, 2, 5);
  const auto occ = occupancy_bundle(f.game, f.expert);
  const std::size_t A = f.game.num_joint_actions();
  std::vector<double> avg(4, 0.0);
  for (std::size_t h = 0; h < 5; ++h) {
    double sd = 0.0, sr = 0.0;
    for (std::size_t s = 0; s < 4; ++s) {
      sd += occ.d_step[h][s];
      avg[s] += occ.d_step[h][s] / 5.0;
      for (std::size_t a = 0; a < A; ++a) {
        sr += occ.rho_step[h][s * A + a];
        EXPECT_NEAR(occ.rho_step[h][s * A + a], occ.d_step[h][s] * f.expert.at(s, a), 1e-15);
      }
    }
    EXPECT_NEAR(sd, 1.0, 1e-12);
    EXPECT_NEAR(sr, 1.0, 1e-12);
  }
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(occ.d[s], avg[s], 1e-15);
}

TEST(Value, DynamicProgramEqualsOccupancyInnerProductAndPaths) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = tiny(seed + 100);
    const auto occ = occupancy_bundle(f.game, f.learner);
    const auto ref = oracle::enumerate_paths(f.game, oracle::rows_of(f.learner));
    for (std::size_t i = 0; i < 2; ++i) {
      const double v = value(f.game, f.learner, i);
      EXPECT_NEAR(v, value_from_occupancy(f.game, occ, i), 1e-9);
      EXPECT_NEAR(v, ref.values[i], 1e-12);
    }
  }
}

TEST(Value, AdvantageIsQMinusV) {
  const auto f = tiny(3, 4, 2, 4);
  const auto t = advantage_tensor(f.game, f.expert, 1);
  const std::size_t A = f.game.num_joint_actions();
  for (std::size_t h = 0; h < 4; ++h) {
    for (std::size_t s = 0; s < 4; ++s) {
      double mean = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        EXPECT_DOUBLE_EQ(t.adv[h][s * A + a], t.q[h][s * A + a] - t.v[h][s]);
        mean += f.expert.at(s, a) * t.adv[h][s * A + a];
      }
      EXPECT_NEAR(mean, 0.0, 1e-12);
    }
  }
}

TEST(Value, PerformanceDifferenceIdentity) {
  // J(pi2) - J(pi1) = sum_h E_{d_h^{pi2}} E_{a ~ pi2}[A_h^{pi1}(s, a)].
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(500, seed));
    RandomGameSpec spec;
    spec.num_states = 2 + rng.index(4);
    spec.num_agents = 1 + rng.index(2);
    spec.actions_per_agent = 2 + rng.index(2);
    spec.horizon = 1 + rng.index(5);
    const auto f = random_mg(spec, seed);
    const auto& pi1 = f.expert;
    const auto& pi2 = f.learner;
    const auto occ2 = occupancy_bundle(f.game, pi2);
    const std::size_t A = f.game.num_joint_actions();
    for (std::size_t i = 0; i < f.game.num_agents(); ++i) {
      const auto adv = advantage_tensor(f.game, pi1, i).adv;
      double rhs = 0.0;
      for (std::size_t h = 0; h < spec.horizon; ++h) {
        for (std::size_t k = 0; k < spec.num_states * A; ++k) rhs += occ2.rho_step[h][k] * adv[h][k];
      }
      EXPECT_NEAR(value(f.game, pi2, i) - value(f.game, pi1, i), rhs, 1e-9);
    }
  }
}

TEST(TimeIndexed, StationarizeIsExactOnLayeredGames) {
  RandomGameSpec spec;
  spec.num_states = 6;
  spec.num_agents = 1;
  spec.actions_per_agent = 2;
  spec.horizon = 3;
  spec.layered = true;
  const auto layered = random_mg(spec, 10);
  const TimeIndexedPolicy mix({layered.expert, layered.learner, layered.expert});
  const auto st = stationarize(layered.game, mix);
  EXPECT_LE(occupancy_l1(occupancy_bundle(layered.game, mix), occupancy_bundle(layered.game, st)), 1e-12);
}

TEST(Losses, TotalVariationAndWeightedLoss) {
  const std::vector<double> p{0.5, 0.5, 0.0}, q{0.0, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(tv(p, q), 0.5);
  MediatorPolicy a(2, 2, {1, 0, 0.5, 0.5});
  MediatorPolicy b(2, 2, {0, 1, 0.5, 0.5});
  EXPECT_DOUBLE_EQ(weighted_tv_loss(a, b, std::vector<double>{0.25, 0.75}), 0.25);
  EXPECT_THROW(weighted_tv_loss(a, b, std::vector<double>{0.5, 0.6}), std::invalid_argument);
}

TEST(Moment, MatchesSignVectorOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // S * |A| = 2 * 4 = 8 entries -> 256 sign vectors.
    const auto f = tiny(seed + 40, 2, 2, 3);
    const double oracle_value = oracle::sign_vector_moment(f.game, f.expert, f.learner);
    EXPECT_NEAR(moment_matching_error(f.game, f.expert, f.learner), oracle_value, 1e-12);
    EXPECT_NEAR(moment_matching_error(f.game, f.expert, f.learner, false), oracle_value * 3.0, 1e-11);
  }
}

TEST(Coverage, MinimumAveragedVisitation) {
  const auto f = fig1_game(4);
  EXPECT_DOUBLE_EQ(coverage_constant(f.game, f.expert), 0.0);
  const auto g = tiny(1);
  const auto d = occupancy_bundle(g.game, g.expert).d;
  EXPECT_DOUBLE_EQ(coverage_constant(g.game, g.expert), *std::min_element(d.begin(), d.end()));
}
