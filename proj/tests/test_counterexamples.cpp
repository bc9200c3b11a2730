#include <gtest/gtest.h>

#include "mailab/mailab.hpp"
#include "oracles.hpp"

using namespace mailab;

namespace {

double witness_gain(const Fixture& f, const MediatorPolicy& sigma, const Deviation& phi) {
  const auto fn = oracle::as_fn(phi);
  const auto base = oracle::enumerate_paths(f.game, oracle::rows_of(sigma)).values;
  const auto dev = oracle::enumerate_paths(f.game, oracle::rows_of(sigma), &fn).values;
  return dev[phi.agent()] - base[phi.agent()];
}

/// sum_h sum_s d_h(s)/H TV(expert(s), learner(s)) with d_h from path enumeration.
double path_bc_error(const Fixture& f) {
  const auto paths = oracle::enumerate_paths(f.game, oracle::rows_of(f.expert));
  double total = 0.0;
  for (std::size_t h = 0; h < f.game.horizon(); ++h) {
    for (std::size_t s = 0; s < f.game.num_states(); ++s) {
      double t = 0.0;
      for (std::size_t a = 0; a < f.game.num_joint_actions(); ++a) t += std::abs(f.expert.at(s, a) - f.learner.at(s, a));
      total += paths.d_step[h][s] * 0.5 * t / double(f.game.horizon());
    }
  }
  return total;
}

void expect_valid(const Fixture& f) {
  EXPECT_TRUE(validate_game(f.game, {f.reward_bound}).ok()) << f.name;
  EXPECT_TRUE(validate_policy(f.game, f.expert).empty()) << f.name;
  EXPECT_TRUE(validate_policy(f.game, f.learner).empty()) << f.name;
}

}  // namespace

TEST(Fig1, ValidAndExpectedValuesReproduced) {
  for (std::size_t H : {3u, 4u, 8u, 16u}) {
    const auto f = fig1_game(H);
    expect_valid(f);
    EXPECT_EQ(f.game.num_states(), 2 * H - 1);
    const auto phi = DeviationClass::complete(2);
    EXPECT_NEAR(regret(f.game, f.expert, phi), f.expected.at("regret_expert"), 1e-9);
    EXPECT_NEAR(regret(f.game, f.learner, phi), f.expected.at("regret_learner"), 1e-9);
    EXPECT_NEAR(regret_gap(f.game, f.expert, f.learner, phi), double(H) - 2.0, 1e-9);
    EXPECT_NEAR(value_gap(f.game, f.expert, f.learner), 0.0, 1e-12);
    EXPECT_EQ(occupancy_l1(occupancy_bundle(f.game, f.expert), occupancy_bundle(f.game, f.learner)), 0.0);
  }
}

TEST(Fig1, WitnessGainsFromPathEnumeration) {
  for (std::size_t H : {3u, 5u, 9u}) {
    const auto f = fig1_game(H);
    ASSERT_EQ(f.witnesses.size(), 1u);
    EXPECT_NEAR(witness_gain(f, f.learner, f.witnesses[0]), double(H) - 2.0, 1e-12);
    EXPECT_NEAR(witness_gain(f, f.expert, f.witnesses[0]), 0.0, 1e-12);
  }
  EXPECT_NEAR(regret_gap(fig1_game(3).game, fig1_game(3).expert, fig1_game(3).learner, DeviationClass::complete(2)),
              1.0, 1e-12);
  EXPECT_THROW(fig1_game(2), std::invalid_argument);
}

TEST(CoverageLB, ReferenceInstanceFrozenValues) {
  const auto f = coverage_lb_game(20, 10.0, 0.05, 0.001);
  expect_valid(f);
  // 0.5 * (1 - 2 beta) * (u' - 2) and that plus eps H / (2 beta) * (u' - 2).
  EXPECT_NEAR(witness_gain(f, f.expert, f.witnesses[0]), 3.6, 1e-12);
  EXPECT_NEAR(witness_gain(f, f.learner, f.witnesses[0]), 5.2, 1e-12);
  EXPECT_NEAR(path_bc_error(f), 0.001, 1e-15);
  const auto phi = DeviationClass::complete(2);
  EXPECT_NEAR(regret(f.game, f.expert, phi), f.expected.at("regret_expert"), 1e-9);
  EXPECT_NEAR(regret(f.game, f.learner, phi), f.expected.at("regret_learner"), 1e-9);
  EXPECT_NEAR(regret_gap(f.game, f.expert, f.learner, phi), 1.6, 1e-9);
  EXPECT_NEAR(bc_loss(f.expert, f.learner, occupancy_bundle(f.game, f.expert).d), 0.001, 1e-12);
  EXPECT_LE(moment_matching_error(f.game, f.expert, f.learner), 0.002 + 1e-12);
  // the construction's averaged visitation is beta/H-scale, so the floor flag is recorded as unmet
  EXPECT_FALSE(f.flags.at("coverage_floor_met"));
  EXPECT_NEAR(f.params.at("beta_measured"), 0.0025, 1e-12);
  EXPECT_TRUE(f.flags.at("recoverability_within_u_prime"));
}

TEST(CoverageLB, ZeroEpsHasZeroGapAndGapIsLinearInEps) {
  const auto phi = DeviationClass::complete(2);
  const auto z = coverage_lb_game(12, 6.0, 0.1, 0.0);
  EXPECT_NEAR(regret_gap(z.game, z.expert, z.learner, phi), 0.0, 1e-12);
  for (double eps : {0.001, 0.002, 0.004}) {
    const auto f = coverage_lb_game(12, 6.0, 0.1, eps);
    EXPECT_NEAR(regret_gap(f.game, f.expert, f.learner, phi), eps * 12.0 / 0.2 * 4.0, 1e-9);
    EXPECT_NEAR(path_bc_error(f), eps, 1e-15);
  }
}

TEST(CoverageLB, ParameterErrors) {
  EXPECT_THROW(coverage_lb_game(20, 2.0, 0.05, 0.001), std::invalid_argument);
  EXPECT_THROW(coverage_lb_game(5, 10.0, 0.05, 0.001), std::invalid_argument);
  EXPECT_THROW(coverage_lb_game(20, 10.0, 0.3, 0.001), std::invalid_argument);
  EXPECT_THROW(coverage_lb_game(20, 10.0, 0.05, -0.1), std::invalid_argument);
  EXPECT_THROW(coverage_lb_game(20, 10.0, 0.01, 0.01), std::invalid_argument);
}

TEST(AliceLB, ReferenceInstanceFrozenValues) {
  const auto f = alice_lb_game(20, 6.0, 0.1, 0.005);
  expect_valid(f);
  // beta (u' - 1) and (beta + H eps)(u' - 1).
  EXPECT_NEAR(witness_gain(f, f.expert, f.witnesses[0]), 0.5, 1e-12);
  EXPECT_NEAR(witness_gain(f, f.learner, f.witnesses[0]), 1.0, 1e-12);
  const auto phi = DeviationClass::complete(1);
  EXPECT_NEAR(regret_gap(f.game, f.expert, f.learner, phi), 0.5, 1e-9);
  EXPECT_NEAR(value_gap(f.game, f.expert, f.learner), 0.5, 1e-9);
  EXPECT_NEAR(path_bc_error(f), 0.005, 1e-15);

  const auto swap = DeviationClass::swap_class(f.game);
  const auto dev = deviated_state_distributions(f.game, f.learner, swap);
  EXPECT_LE(malice_loss(f.expert, f.learner, occupancy_bundle(f.game, f.expert).d, dev), 0.005 + 1e-12);
  ExpertOracle oracle(f.expert);
  EXPECT_LE(blades_loss(oracle, f.learner, dev), 0.005 + 1e-12);
}

TEST(AliceLB, ParameterErrors) {
  EXPECT_THROW(alice_lb_game(20, 1.0, 0.1, 0.005), std::invalid_argument);
  EXPECT_THROW(alice_lb_game(20, 6.0, 0.0, 0.005), std::invalid_argument);
  EXPECT_THROW(alice_lb_game(20, 6.0, 0.5, 0.05), std::invalid_argument);
}

TEST(MultiCE, BothPoliciesAreEquilibriaWithDifferentValues) {
  const auto [r, rp] = multi_ce_nfg();
  expect_valid(r);
  for (std::size_t i = 0; i < 2; ++i) {
    // every deviation of a one-shot game is a map {a1,a2} -> {a1,a2}
    EXPECT_NEAR(oracle::best_deviated_value(r.game, r.expert, i), value(r.game, r.expert, i), 1e-12);
    EXPECT_NEAR(oracle::best_deviated_value(r.game, r.learner, i), value(r.game, r.learner, i), 1e-12);
    EXPECT_NEAR(oracle::best_deviated_value(rp.game, rp.expert, i), value(rp.game, rp.expert, i), 1e-12);
  }
  EXPECT_NEAR(oracle::enumerate_paths(r.game, oracle::rows_of(r.learner)).values[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(value_gap(r.game, r.expert, r.learner), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(regret_gap(r.game, r.expert, r.learner, DeviationClass::complete(2)), 0.0, 1e-12);
  EXPECT_FALSE(validate_game(r.game).ok());
}

TEST(RandomMG, DeterministicPerSeed) {
  RandomGameSpec spec;
  const auto a = random_mg(spec, 5), b = random_mg(spec, 5), c = random_mg(spec, 6);
  EXPECT_EQ(a.expert, b.expert);
  EXPECT_EQ(a.learner, b.learner);
  EXPECT_EQ(to_json(a.game), to_json(b.game));
  EXPECT_NE(a.expert, c.expert);
  expect_valid(a);
}

TEST(RandomMG, CapsAndFlags) {
  RandomGameSpec big;
  big.num_states = kMaxRandomStates + 1;
  EXPECT_THROW(random_mg(big, 1), std::invalid_argument);
  RandomGameSpec wide;
  wide.num_agents = 3;
  wide.actions_per_agent = 5;
  EXPECT_THROW(random_mg(wide, 1), std::invalid_argument);

  RandomGameSpec single;
  single.single_agent = true;
  single.num_agents = 4;
  EXPECT_EQ(random_mg(single, 1).game.num_agents(), 1u);

  RandomGameSpec cov;
  cov.full_coverage_expert = true;
  const auto f = random_mg(cov, 3);
  EXPECT_GT(coverage_constant(f.game, f.expert), 0.0);
  EXPECT_GT(f.params.at("beta_measured"), 0.0);

  RandomGameSpec common;
  common.common_payoff = true;
  const auto g = random_mg(common, 2);
  for (std::size_t s = 0; s < g.game.num_states(); ++s) {
    for (std::size_t a = 0; a < g.game.num_joint_actions(); ++a) EXPECT_EQ(g.game.reward(0, s, a), g.game.reward(1, s, a));
  }
}

TEST(RandomMG, LayeredGamesVisitLayerHOnlyAtStepH) {
  RandomGameSpec spec;
  spec.num_states = 7;
  spec.horizon = 3;
  spec.layered = true;
  const auto f = random_mg(spec, 9);
  const auto paths = oracle::enumerate_paths(f.game, oracle::rows_of(f.learner));
  const std::vector<std::size_t> layer{0, 0, 0, 1, 1, 2, 2};
  for (std::size_t h = 0; h < 3; ++h) {
    for (std::size_t s = 0; s < 7; ++s) {
      if (layer[s] == h) continue;
      EXPECT_EQ(paths.d_step[h][s], 0.0);
    }
  }
  spec.layer_sizes = {3, 3};
  EXPECT_THROW(random_mg(spec, 1), std::invalid_argument);
}
