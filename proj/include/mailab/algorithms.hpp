#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mailab/oco.hpp"
#include "mailab/oracle.hpp"
#include "mailab/regret.hpp"
#include "mailab/sampling.hpp"

namespace mailab {

// ---------------------------------------------------------------- J-BC

enum class FillRule { uniform, adversarial, copy_expert };

struct JBCOptions {
  FillRule fill = FillRule::uniform;
  /// Class the adversarial fill maximizes regret against; complete if unset.
  std::optional<DeviationClass> adversary_class;
};

namespace detail {

inline MediatorPolicy fill_off_support(const MarkovGame& game, MediatorPolicy fitted, const std::vector<bool>& support,
                                       const JBCOptions& options, const MediatorPolicy* expert) {
  const std::size_t A = game.num_joint_actions();
  const std::vector<double> uniform(A, 1.0 / double(A));
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    if (support[s]) continue;
    if (options.fill == FillRule::copy_expert) {
      if (expert == nullptr) throw std::invalid_argument("copy-expert fill needs the expert policy");
      fitted.set_row(s, expert->row(s));
    } else {
      fitted.set_row(s, uniform);
    }
  }
  if (options.fill != FillRule::adversarial) return fitted;

  // Greedy: fix off-support rows one at a time to the one-hot row that maximizes regret.
  const auto phi = options.adversary_class.value_or(DeviationClass::complete(game.num_agents()));
  std::vector<double> onehot(A, 0.0);
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    if (support[s]) continue;
    double best_regret = -std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    for (std::size_t a = 0; a < A; ++a) {
      std::fill(onehot.begin(), onehot.end(), 0.0);
      onehot[a] = 1.0;
      fitted.set_row(s, onehot);
      const double r = regret(game, fitted, phi);
      if (r > best_regret) {
        best_regret = r;
        best_a = a;
      }
    }
    std::fill(onehot.begin(), onehot.end(), 0.0);
    onehot[best_a] = 1.0;
    fitted.set_row(s, onehot);
  }
  return fitted;
}

}  // namespace detail

/// Exact J-BC: copy the expert wherever d^{pi_sigmaE}(s) > 0, fill elsewhere.
inline MediatorPolicy j_bc(const MarkovGame& game, const MediatorPolicy& expert, const JBCOptions& options = {}) {
  require_shape(game, expert);
  const auto occ = occupancy_bundle(game, expert);
  std::vector<bool> support(game.num_states());
  for (std::size_t s = 0; s < support.size(); ++s) support[s] = occ.d[s] > 0.0;
  return detail::fill_off_support(game, expert, support, options, &expert);
}

/// Maximum-likelihood J-BC from demonstrations: empirical conditional on visited states.
inline MediatorPolicy j_bc(const MarkovGame& game, const DemonstrationSet& demos, const JBCOptions& options = {},
                           const MediatorPolicy* expert = nullptr) {
  if (demos.empty()) throw std::invalid_argument("J-BC needs at least one demonstration");
  const std::size_t A = game.num_joint_actions();
  const auto counts = empirical_counts(game, demos);
  MediatorPolicy fitted(game.num_states(), A);
  std::vector<bool> support(game.num_states());
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    support[s] = counts.state[s] > 0.0;
    if (!support[s]) continue;
    auto row = fitted.row(s);
    for (std::size_t a = 0; a < A; ++a) row[a] = counts.joint[s * A + a] / counts.state[s];
  }
  return detail::fill_off_support(game, std::move(fitted), support, options, expert);
}

// ---------------------------------------------------------------- J-IRL

enum class PolicyPlayer { exact_br, soft_vi };

struct JIRLConfig {
  std::size_t rounds = 500;
  PolicyPlayer player = PolicyPlayer::exact_br;
  /// Soft value iteration temperature.
  double temperature = 0.05;
  /// lambda in R(f) = -lambda/2 ||f||^2; zero gives f = sign(rho_E - rho_mix).
  double regularizer = 0.0;
  /// Also consider the stationary policy induced by the running mixture.
  bool mixture_candidates = true;
};

struct JIRLResult {
  MediatorPolicy policy;
  double moment_error = 0.0;  // normalized, of `policy`
  std::size_t best_round = 0;
  bool best_is_mixture = false;
  std::vector<double> iterate_errors;  // sigma^(n), n = 1..N
  std::vector<double> best_so_far;
};

/// Optimal (hard or soft) time-indexed policy for a common reward f[s * |A| + a].
inline TimeIndexedPolicy solve_joint_mdp(const MarkovGame& game, std::span<const double> f, PolicyPlayer player,
                                         double temperature) {
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  if (player == PolicyPlayer::soft_vi && !(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<MediatorPolicy> steps(H, MediatorPolicy(S, A));
  std::vector<double> v_next(S, 0.0);
  std::vector<double> v(S, 0.0);
  std::vector<double> q(A);
  for (std::size_t h = H; h-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        q[a] = f[s * A + a];
        if (h + 1 < H) {
          const auto T = game.next_state_dist(s, a);
          for (std::size_t t = 0; t < S; ++t) q[a] += T[t] * v_next[t];
        }
      }
      auto row = steps[h].row(s);
      const std::size_t best = std::size_t(std::max_element(q.begin(), q.end()) - q.begin());
      if (player == PolicyPlayer::exact_br) {
        row[best] = 1.0;
        v[s] = q[best];
      } else {
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          row[a] = std::exp((q[a] - q[best]) / temperature);
          z += row[a];
        }
        for (auto& x : row) x /= z;
        v[s] = q[best] + temperature * std::log(z);
      }
    }
    std::swap(v, v_next);
  }
  return TimeIndexedPolicy(std::move(steps));
}

/**
 * J-IRL over joint policies. Each round the reward player best-responds to
 * the uniform mixture of past iterates and the policy player solves the
 * joint-action MDP for that reward; the result is stationarized. The returned
 * policy has the smallest exact moment-matching error among the candidates.
 */
inline JIRLResult j_irl(const MarkovGame& game, const OccupancyBundle& expert_occ, const JIRLConfig& config,
                        std::optional<MediatorPolicy> initial = std::nullopt) {
  if (config.rounds == 0) throw std::invalid_argument("J-IRL needs at least one round");
  if (!(config.regularizer >= 0.0)) throw std::invalid_argument("regularizer must be nonnegative");
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  if (expert_occ.rho.size() != S * A) throw std::invalid_argument("expert occupancy shape mismatch");

  MediatorPolicy sigma = initial.value_or(MediatorPolicy::uniform(game));
  require_shape(game, sigma);
  std::vector<std::vector<double>> mix_sum(H, std::vector<double>(S * A, 0.0));
  std::vector<double> f(S * A);

  JIRLResult out;
  out.moment_error = std::numeric_limits<double>::infinity();
  auto consider = [&](const MediatorPolicy& cand, double err, std::size_t round, bool mixture) {
    if (err < out.moment_error) {
      out.moment_error = err;
      out.policy = cand;
      out.best_round = round;
      out.best_is_mixture = mixture;
    }
  };
  for (std::size_t n = 1; n <= config.rounds; ++n) {
    const auto occ = occupancy_bundle(game, sigma);
    const double err = occupancy_l1(expert_occ, occ);
    out.iterate_errors.push_back(err);
    consider(sigma, err, n, false);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t k = 0; k < S * A; ++k) mix_sum[h][k] += occ.rho_step[h][k];
    }

    // mixture over sigma^(1..n): per-step occupancy realized by a time-indexed policy
    std::vector<MediatorPolicy> layers(H, MediatorPolicy(S, A));
    std::vector<double> rho_mix(S * A, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t s = 0; s < S; ++s) {
        double mass = 0.0;
        for (std::size_t a = 0; a < A; ++a) mass += mix_sum[h][s * A + a];
        auto row = layers[h].row(s);
        for (std::size_t a = 0; a < A; ++a) {
          row[a] = mass > 0.0 ? mix_sum[h][s * A + a] / mass : 1.0 / double(A);
          rho_mix[s * A + a] += mix_sum[h][s * A + a] / (double(n) * double(H));
        }
      }
    }
    if (config.mixture_candidates && n > 1) {
      const auto cand = stationarize(game, TimeIndexedPolicy(layers));
      consider(cand, occupancy_l1(expert_occ, occupancy_bundle(game, cand)), n, true);
    }
    if (out.moment_error == 0.0 || n == config.rounds) break;

    for (std::size_t k = 0; k < S * A; ++k) {
      const double diff = expert_occ.rho[k] - rho_mix[k];
      if (config.regularizer > 0.0) {
        f[k] = std::clamp(diff / config.regularizer, -1.0, 1.0);
      } else {
        f[k] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      }
    }
    sigma = stationarize(game, solve_joint_mdp(game, f, config.player, config.temperature));
  }
  double best = std::numeric_limits<double>::infinity();
  for (double e : out.iterate_errors) {
    best = std::min(best, e);
    out.best_so_far.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------- MALICE / BLADES

struct TrainConfig {
  OCOConfig oco;
  DeviationClass phi;
  /// Estimate deviated state distributions from rollouts instead of exactly.
  bool monte_carlo = false;
  std::size_t mc_samples = 1000;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MediatorPolicy policy;
  /// l(sigma, sigma) of the returned iterate.
  double self_consistent_loss = 0.0;
  std::size_t best_round = 0;
  std::vector<TraceRow> trace;
  std::size_t queries = 0;
};

/// Expert-side inputs of MALICE: recommendation targets and the expert state distribution.
struct MaliceData {
  MediatorPolicy targets;
  std::vector<double> d_expert;
};

inline MaliceData malice_data_exact(const MarkovGame& game, const MediatorPolicy& expert) {
  return {expert, occupancy_bundle(game, expert).d};
}

inline MaliceData malice_data_from_demos(const MarkovGame& game, const DemonstrationSet& demos) {
  return {j_bc(game, demos), empirical_state_distribution(game, demos)};
}

namespace detail {

/// Rollout estimate of every d^{pi_{sigma,phi}}; seeds depend only on (seed, tag, k).
inline std::vector<DeviatedDistribution> sampled_deviated_distributions(const MarkovGame& game,
                                                                        const MediatorPolicy& sigma,
                                                                        const DeviationClass& phi, std::size_t samples,
                                                                        std::uint64_t seed, std::uint64_t tag) {
  std::vector<DeviatedDistribution> out;
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < phi.num_agents(); ++i) {
    const auto& list = phi.deviations(i);
    for (std::size_t j = 0; j < list.size(); ++j, ++k) {
      const auto schedule = induced_schedule(game, sigma, list[j]);
      const auto demos = sample_demonstrations(game, schedule, samples, derive_seed(derive_seed(seed, tag), k));
      out.push_back({{i, j}, empirical_state_distribution(game, demos)});
    }
  }
  return out;
}

inline std::size_t argmin_trace(const std::vector<TraceRow>& trace) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k].loss < trace[best].loss) best = k;
  }
  return best;
}

inline void require_training_class(const MarkovGame& game, const TrainConfig& config) {
  if (config.phi.num_agents() != game.num_agents()) throw std::invalid_argument("deviation class agent count mismatch");
  if (!config.phi.all_explicit()) throw std::invalid_argument("training requires an explicit deviation class");
}

}  // namespace detail

/**
 * MALICE. Round n builds l_MALICE(., D_E, sigma^(n)) from the deviated state
 * distributions of the current iterate and hands it to the OCO rule. The
 * trace loss of round n is l(sigma^(n), sigma^(n)), so in exact mode the
 * best-by-validation iterate is the trace argmin.
 */
inline TrainResult malice_train(const MarkovGame& game, const MaliceData& data, const MediatorPolicy& initial,
                                const TrainConfig& config) {
  detail::require_training_class(game, config);
  require_shape(game, initial);
  for (std::size_t s = 0; s < data.d_expert.size(); ++s) {
    if (!(data.d_expert[s] > 0.0)) {
      throw CoverageViolation("expert state distribution vanishes at state " + std::to_string(s) +
                              "; importance weights are undefined");
    }
  }
  auto deviated_at = [&](const MediatorPolicy& sigma, std::uint64_t tag) {
    return config.monte_carlo
               ? detail::sampled_deviated_distributions(game, sigma, config.phi, config.mc_samples, config.seed, tag)
               : deviated_state_distributions(game, sigma, config.phi);
  };
  const LossBuilder build = [&](std::size_t n, const MediatorPolicy& current) {
    return build_malice_loss(data.targets, data.d_expert, deviated_at(current, n));
  };
  auto run = oco_run(initial, build, config.oco);

  TrainResult out;
  out.trace = run.trace;
  if (!config.monte_carlo) {
    const std::size_t best = detail::argmin_trace(run.trace);
    out.best_round = best + 1;
    out.policy = run.iterates[best];
    out.self_consistent_loss = run.trace[best].loss;
    return out;
  }
  // held-out rollouts with fresh seeds
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < run.iterates.size(); ++k) {
    const auto& cand = run.iterates[k];
    const double l = build_malice_loss(data.targets, data.d_expert, deviated_at(cand, config.oco.rounds + 1 + k))(cand);
    if (l < best_loss) {
      best_loss = l;
      out.best_round = k + 1;
      out.policy = cand;
    }
  }
  out.self_consistent_loss = best_loss;
  return out;
}

/**
 * BLADES. Starts from J-BC on D_E and reads expert recommendations only
 * through the oracle, on states visited by some deviated distribution of the
 * current iterate.
 */
inline TrainResult blades_train(const MarkovGame& game, ExpertOracle& oracle, const DemonstrationSet& demos,
                                const TrainConfig& config) {
  detail::require_training_class(game, config);
  if (oracle.num_states() != game.num_states() || oracle.num_joint() != game.num_joint_actions()) {
    throw std::invalid_argument("oracle shape does not match game");
  }
  const std::size_t before = oracle.query_count();
  const auto initial = j_bc(game, demos);
  auto deviated_at = [&](const MediatorPolicy& sigma, std::uint64_t tag) {
    return config.monte_carlo
               ? detail::sampled_deviated_distributions(game, sigma, config.phi, config.mc_samples, config.seed, tag)
               : deviated_state_distributions(game, sigma, config.phi);
  };
  const LossBuilder build = [&](std::size_t n, const MediatorPolicy& current) {
    oracle.set_round(n);
    const auto deviated = deviated_at(current, n);
    return build_blades_loss(query_targets(oracle, deviated), deviated);
  };
  auto run = oco_run(initial, build, config.oco);

  TrainResult out;
  out.trace = run.trace;
  if (!config.monte_carlo) {
    const std::size_t best = detail::argmin_trace(run.trace);
    out.best_round = best + 1;
    out.policy = run.iterates[best];
    out.self_consistent_loss = run.trace[best].loss;
  } else {
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < run.iterates.size(); ++k) {
      const auto& cand = run.iterates[k];
      const std::size_t tag = config.oco.rounds + 1 + k;
      oracle.set_round(tag);
      const double l = blades_loss(oracle, cand, deviated_at(cand, tag));
      if (l < best_loss) {
        best_loss = l;
        out.best_round = k + 1;
        out.policy = cand;
      }
    }
    out.self_consistent_loss = best_loss;
  }
  out.queries = oracle.query_count() - before;
  return out;
}

}  // namespace mailab
