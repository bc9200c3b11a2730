#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mailab/regret.hpp"
#include "mailab/sampling.hpp"

namespace mailab {

/// A generated game with expert, learner, witnesses and closed-form expectations.
struct Fixture {
  std::string name;
  MarkovGame game;
  MediatorPolicy expert;
  MediatorPolicy learner;
  std::vector<Deviation> witnesses;
  std::map<std::string, double> expected;
  std::map<std::string, double> params;
  std::map<std::string, bool> flags;
  double reward_bound = 1.0;
};

namespace detail {

inline std::vector<std::string> numbered(const char* prefix, std::size_t n, std::size_t first = 0) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(prefix + std::to_string(first + k));
  return out;
}

/**
 * Two parallel chains after a fork at s0 and a second fork at s1, truncated
 * to the states reachable within H steps: s0 | s1 s2 | s3 s4 | ... |
 * s_{2H-3} s_{2H-2}. `upper` is the joint action leading upward from s0/s1.
 * The final layer self-loops; its outgoing transitions are never used.
 */
inline std::vector<double> fork_chain_transitions(std::size_t H, std::size_t A, std::size_t upper_from_s0,
                                                  std::size_t upper_from_s1, bool s1_forks) {
  const std::size_t S = 2 * H - 1;
  std::vector<double> T(S * A * S, 0.0);
  auto set = [&](std::size_t s, std::size_t a, std::size_t t) { T[(s * A + a) * S + t] = 1.0; };
  for (std::size_t a = 0; a < A; ++a) {
    if (S == 1) {
      set(0, a, 0);
      continue;
    }
    set(0, a, a == upper_from_s0 ? 1 : 2);
    for (std::size_t s = 1; s < S; ++s) {
      std::size_t next = s + 2 < S ? s + 2 : s;
      if (s == 1 && s1_forks && S > 4) next = a == upper_from_s1 ? 3 : 4;
      set(s, a, next);
    }
  }
  return T;
}

inline std::vector<double> point_mass(std::size_t n, std::size_t k) {
  std::vector<double> p(n, 0.0);
  p[k] = 1.0;
  return p;
}

/// Action-free reward 1 on the listed states, shared by all agents.
inline std::vector<double> state_rewards(std::size_t agents, std::size_t S, std::size_t A,
                                         const std::vector<std::size_t>& rewarded) {
  std::vector<double> common(S * A, 0.0);
  for (auto s : rewarded) {
    for (std::size_t a = 0; a < A; ++a) common[s * A + a] = 1.0;
  }
  std::vector<double> r;
  for (std::size_t i = 0; i < agents; ++i) r.insert(r.end(), common.begin(), common.end());
  return r;
}

/// Agent 0's map (s0,a1)->a2, (s1,a1)->a2 on the three-action fork games.
inline Deviation fork_witness(std::size_t S) {
  auto phi = Deviation::identity(0, S, 3);
  phi.set(0, 0, 0, 1);
  phi.set(0, 1, 0, 1);
  return phi;
}

}  // namespace detail

/// Three-action two-agent fork game in which agent 0 playing a2 against a1 climbs.
inline Fixture fig1_game(std::size_t H) {
  if (H < 3) throw std::invalid_argument("fig1 requires H >= 3");
  const std::size_t S = 2 * H - 1;
  const std::vector<std::vector<std::string>> actions(2, {"a1", "a2", "a3"});
  const std::size_t A = 9;
  const std::size_t a1a1 = 0, a2a1 = 3, a3a3 = 8;

  std::vector<std::size_t> rewarded;
  for (std::size_t s = 3; s + 3 <= 2 * H; s += 2) rewarded.push_back(s);

  Fixture f;
  f.name = "fig1";
  f.game = MarkovGame(H, detail::numbered("s", S), actions, detail::point_mass(S, 0),
                      detail::fork_chain_transitions(H, A, a2a1, a2a1, true),
                      detail::state_rewards(2, S, A, rewarded));
  std::vector<std::size_t> expert_choice(S, a1a1);
  expert_choice[1] = a3a3;
  std::vector<std::size_t> learner_choice(S, a1a1);
  f.expert = MediatorPolicy::deterministic(f.game, expert_choice);
  f.learner = MediatorPolicy::deterministic(f.game, learner_choice);
  f.witnesses = {detail::fork_witness(S)};
  const double h = double(H);
  f.expected = {{"occupancy_l1", 0.0}, {"regret_expert", 0.0}, {"regret_learner", h - 2.0},
                {"regret_gap", h - 2.0}, {"value_gap", 0.0}};
  f.params = {{"H", h}};
  return f;
}

/**
 * Fork game with rewards on s3..s_{2u'-3}; the expert climbs from s0 with
 * probability 2 beta and the learner moves eps H / (2 beta) of the a3a3 mass
 * at s1 onto a1a1.
 */
inline Fixture coverage_lb_game(std::size_t H, double u, double beta, double eps) {
  const double u_prime = std::floor(u);
  if (!(u >= 3.0) || double(H) < u) throw std::invalid_argument("coverage_lb requires H >= u >= 3");
  if (!(beta > 0.0 && beta <= 0.25)) throw std::invalid_argument("coverage_lb requires 0 < beta <= 1/4");
  if (!(eps >= 0.0)) throw std::invalid_argument("coverage_lb requires eps >= 0");
  const double carve = eps * double(H) / (2.0 * beta);
  if (carve > 0.5) throw std::invalid_argument("coverage_lb requires eps H / (2 beta) <= 1/2");

  const std::size_t S = 2 * H - 1;
  const std::vector<std::vector<std::string>> actions(2, {"a1", "a2", "a3"});
  const std::size_t A = 9;
  const std::size_t a1a1 = 0, a2a1 = 3, a3a3 = 8;
  const auto up = static_cast<std::size_t>(u_prime);

  std::vector<std::size_t> rewarded;
  for (std::size_t s = 3; s + 3 <= 2 * up; s += 2) rewarded.push_back(s);

  Fixture f;
  f.name = "coverage_lb";
  f.game = MarkovGame(H, detail::numbered("s", S), actions, detail::point_mass(S, 0),
                      detail::fork_chain_transitions(H, A, a2a1, a2a1, true),
                      detail::state_rewards(2, S, A, rewarded));
  f.expert = MediatorPolicy::deterministic(f.game, std::vector<std::size_t>(S, a1a1));
  f.expert.at(0, a1a1) = 1.0 - 2.0 * beta;
  f.expert.at(0, a2a1) = 2.0 * beta;
  f.expert.at(1, a1a1) = 0.0;
  f.expert.at(1, a2a1) = 0.5;
  f.expert.at(1, a3a3) = 0.5;
  f.learner = f.expert;
  f.learner.at(1, a1a1) = carve;
  f.learner.at(1, a3a3) = 0.5 - carve;
  f.witnesses = {detail::fork_witness(S)};

  const double regret_expert = 0.5 * (1.0 - 2.0 * beta) * (u_prime - 2.0);
  const double gap = carve * (u_prime - 2.0);
  f.expected = {{"bc_error", eps},
                {"moment_error", 2.0 * eps},
                {"regret_expert", regret_expert},
                {"regret_learner", regret_expert + gap},
                {"regret_gap", gap}};
  f.params = {{"H", double(H)}, {"u", u}, {"u_prime", u_prime}, {"beta", beta}, {"eps", eps}};

  const double beta_measured = coverage_constant(f.game, f.expert);
  const double u_measured = recoverability_constant(f.game, f.expert, DeviationClass::complete(2));
  f.params["beta_measured"] = beta_measured;
  f.params["u_measured"] = u_measured;
  f.flags["coverage_floor_met"] = beta_measured >= beta;
  f.flags["recoverability_within_u_prime"] = u_measured <= u_prime;
  return f;
}

/// Single-agent two-chain MDP with rewards on s1, s3, ..., s_{2u'-3}.
inline Fixture alice_lb_game(std::size_t H, double u, double beta, double eps) {
  const double u_prime = std::floor(u);
  if (!(u >= 2.0) || double(H) < u) throw std::invalid_argument("alice_lb requires H >= u >= 2");
  if (!(beta > 0.0)) throw std::invalid_argument("alice_lb requires beta > 0");
  if (!(eps >= 0.0) || beta + double(H) * eps > 1.0) throw std::invalid_argument("alice_lb requires beta + H eps <= 1");

  const std::size_t S = 2 * H - 1;
  const std::vector<std::vector<std::string>> actions{{"a1", "a2"}};
  const std::size_t A = 2;
  const auto up = static_cast<std::size_t>(u_prime);

  std::vector<std::size_t> rewarded{1};
  for (std::size_t s = 3; s + 3 <= 2 * up; s += 2) rewarded.push_back(s);

  Fixture f;
  f.name = "alice_lb";
  f.game = MarkovGame(H, detail::numbered("s", S), actions, detail::point_mass(S, 0),
                      detail::fork_chain_transitions(H, A, 0, 0, false), detail::state_rewards(1, S, A, rewarded));
  f.expert = MediatorPolicy::deterministic(f.game, std::vector<std::size_t>(S, 0));
  f.expert.at(0, 0) = 1.0 - beta;
  f.expert.at(0, 1) = beta;
  f.learner = f.expert;
  f.learner.at(0, 0) = 1.0 - beta - double(H) * eps;
  f.learner.at(0, 1) = beta + double(H) * eps;
  auto phi = Deviation::identity(0, S, 2);
  phi.set(0, 0, 1, 0);
  f.witnesses = {phi};

  const double gap = eps * double(H) * (u_prime - 1.0);
  f.expected = {{"malice_loss", eps},
                {"blades_loss", eps},
                {"regret_expert", beta * (u_prime - 1.0)},
                {"regret_learner", (beta + double(H) * eps) * (u_prime - 1.0)},
                {"regret_gap", gap},
                {"value_gap", gap}};
  f.params = {{"H", double(H)}, {"u", u}, {"u_prime", u_prime}, {"beta", beta}, {"eps", eps}};
  f.params["beta_measured"] = coverage_constant(f.game, f.expert);
  f.params["u_measured"] = recoverability_constant(f.game, f.expert, DeviationClass::complete(1));
  f.flags["recoverability_within_u_prime"] = f.params["u_measured"] <= u_prime;
  return f;
}

/**
 * One-shot coordination game with two correlated equilibria. The first
 * fixture uses r = (1,1) on a1a1 and (2,2) on a2a2 with expert sigma1 = a1a1
 * and learner sigma2 = (4/9, 2/9, 2/9, 1/9); the second uses the identity
 * diagonal r' with the same pair.
 */
inline std::pair<Fixture, Fixture> multi_ce_nfg() {
  const std::vector<std::vector<std::string>> actions(2, {"a1", "a2"});
  auto game = [&](double top) {
    std::vector<double> T(4, 1.0);
    std::vector<double> r{1.0, 0.0, 0.0, top, 1.0, 0.0, 0.0, top};
    return MarkovGame(1, {"s"}, actions, {1.0}, std::move(T), std::move(r));
  };
  MediatorPolicy sigma1(1, 4, {1.0, 0.0, 0.0, 0.0});
  MediatorPolicy sigma2(1, 4, {4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0});

  Fixture f;
  f.name = "multi_ce_nfg_r";
  f.game = game(2.0);
  f.expert = sigma1;
  f.learner = sigma2;
  f.reward_bound = 2.0;
  f.expected = {{"regret_expert", 0.0}, {"regret_learner", 0.0}, {"regret_gap", 0.0},
                {"value_expert", 1.0}, {"value_learner", 2.0 / 3.0}, {"value_gap", 1.0 / 3.0}};

  Fixture g;
  g.name = "multi_ce_nfg_r_prime";
  g.game = game(1.0);
  g.expert = sigma1;
  g.learner = sigma2;
  g.expected = {{"regret_expert", 0.0}};
  return {std::move(f), std::move(g)};
}

struct RandomGameSpec {
  std::size_t num_states = 4;
  std::size_t num_agents = 2;
  std::size_t actions_per_agent = 2;
  std::size_t horizon = 3;
  bool common_payoff = false;
  bool full_coverage_expert = false;
  bool single_agent = false;
  /// States split into `horizon` layers; layer h only reachable at step h.
  bool layered = false;
  /// Optional explicit layer sizes (layered only); must sum to num_states.
  std::vector<std::size_t> layer_sizes;
};

inline constexpr std::size_t kMaxRandomStates = 200;
inline constexpr std::size_t kMaxRandomJoint = 64;

namespace detail {

/// Random row with (-log U)^2 weights: full support but uneven.
inline void random_row(Rng& rng, std::span<double> row) {
  double z = 0.0;
  for (auto& x : row) {
    const double e = -std::log(1.0 - rng.uniform());
    x = e * e + 1e-3;
    z += x;
  }
  for (auto& x : row) x /= z;
}

}  // namespace detail

inline MediatorPolicy random_policy(const MarkovGame& game, Rng& rng) {
  MediatorPolicy p(game.num_states(), game.num_joint_actions());
  for (std::size_t s = 0; s < game.num_states(); ++s) detail::random_row(rng, p.row(s));
  return p;
}

/// Random game with random expert and learner; expected values are left empty.
inline Fixture random_mg(RandomGameSpec spec, std::uint64_t seed) {
  if (spec.single_agent) spec.num_agents = 1;
  if (spec.num_states == 0 || spec.num_agents == 0 || spec.actions_per_agent == 0 || spec.horizon == 0) {
    throw std::invalid_argument("random game sizes must be positive");
  }
  std::size_t joint = 1;
  for (std::size_t i = 0; i < spec.num_agents; ++i) {
    joint *= spec.actions_per_agent;
    if (joint > kMaxRandomJoint) throw std::invalid_argument("joint action space exceeds the desk-scale cap");
  }
  if (spec.num_states > kMaxRandomStates) throw std::invalid_argument("state count exceeds the desk-scale cap");

  std::vector<std::size_t> layer_of(spec.num_states, 0);
  std::vector<std::vector<std::size_t>> layers;
  if (spec.layered) {
    auto sizes = spec.layer_sizes;
    if (sizes.empty()) {
      if (spec.num_states < spec.horizon) throw std::invalid_argument("layered game needs a state per step");
      sizes.assign(spec.horizon, spec.num_states / spec.horizon);
      for (std::size_t k = 0; k < spec.num_states % spec.horizon; ++k) ++sizes[k];
    }
    std::size_t total = 0;
    for (auto n : sizes) {
      if (n == 0) throw std::invalid_argument("empty layer");
      total += n;
    }
    if (sizes.size() != spec.horizon || total != spec.num_states) {
      throw std::invalid_argument("layer sizes must give one layer per step and sum to num_states");
    }
    std::size_t s = 0;
    for (std::size_t h = 0; h < sizes.size(); ++h) {
      layers.emplace_back();
      for (std::size_t k = 0; k < sizes[h]; ++k, ++s) {
        layer_of[s] = h;
        layers.back().push_back(s);
      }
    }
  }

  Rng rng(seed);
  const std::size_t S = spec.num_states;
  const std::size_t A = joint;
  std::vector<double> rho0(S, 0.0);
  if (spec.layered) {
    std::vector<double> w(layers[0].size());
    detail::random_row(rng, w);
    for (std::size_t k = 0; k < w.size(); ++k) rho0[layers[0][k]] = w[k];
  } else {
    detail::random_row(rng, rho0);
  }
  std::vector<double> T(S * A * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      std::span<double> row(T.data() + (s * A + a) * S, S);
      if (spec.layered) {
        const std::size_t next = std::min(layer_of[s] + 1, layers.size() - 1);
        std::vector<double> w(layers[next].size());
        detail::random_row(rng, w);
        for (std::size_t k = 0; k < w.size(); ++k) row[layers[next][k]] = w[k];
      } else {
        detail::random_row(rng, row);
      }
    }
  }
  std::vector<double> rewards(spec.num_agents * S * A);
  if (spec.common_payoff) {
    std::vector<double> common(S * A);
    for (auto& x : common) x = 2.0 * rng.uniform() - 1.0;
    for (std::size_t i = 0; i < spec.num_agents; ++i) std::copy(common.begin(), common.end(), rewards.begin() + i * S * A);
  } else {
    for (auto& x : rewards) x = 2.0 * rng.uniform() - 1.0;
  }
  std::vector<std::vector<std::string>> actions(spec.num_agents,
                                                detail::numbered("a", spec.actions_per_agent, 1));

  Fixture f;
  f.name = "random";
  f.game = MarkovGame(spec.horizon, detail::numbered("s", S), std::move(actions), std::move(rho0), std::move(T),
                      std::move(rewards));
  f.expert = random_policy(f.game, rng);
  if (spec.full_coverage_expert) {
    for (auto& x : f.expert.mutable_table()) x = 0.9 * x + 0.1 / double(A);
  }
  f.learner = random_policy(f.game, rng);
  f.params = {{"seed", double(seed)}, {"S", double(S)}, {"m", double(spec.num_agents)}, {"H", double(spec.horizon)}};
  if (spec.full_coverage_expert) {
    const double beta = coverage_constant(f.game, f.expert);
    if (!(beta > 0.0)) throw std::logic_error("full-coverage expert has an unvisited state");
    f.params["beta_measured"] = beta;
  }
  return f;
}

}  // namespace mailab
