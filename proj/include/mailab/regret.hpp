#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mailab/eval.hpp"

namespace mailab {

/// Relative tolerance under which a candidate action does not displace the incumbent.
inline constexpr double kTieTolerance = 1e-12;

/// reach[h][s]: s can be occupied at step h under some action sequence.
inline std::vector<std::vector<bool>> reachable_steps(const MarkovGame& game) {
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  std::vector<std::vector<bool>> reach(H, std::vector<bool>(S, false));
  for (std::size_t s = 0; s < S; ++s) reach[0][s] = game.initial_dist()[s] > 0.0;
  for (std::size_t h = 0; h + 1 < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      if (!reach[h][s]) continue;
      for (std::size_t a = 0; a < A; ++a) {
        const auto T = game.next_state_dist(s, a);
        for (std::size_t t = 0; t < S; ++t) {
          if (T[t] > 0.0) reach[h + 1][t] = true;
        }
      }
    }
  }
  return reach;
}

/// Every state is reachable at no more than one step.
inline bool is_time_layered(const MarkovGame& game) {
  const auto reach = reachable_steps(game);
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    std::size_t count = 0;
    for (const auto& layer : reach) count += layer[s] ? 1 : 0;
    if (count > 1) return false;
  }
  return true;
}

/// J_i(pi_{sigma,phi}) - J_i(pi_sigma) for the deviating agent of `phi`.
inline double deviation_gain(const MarkovGame& game, const MediatorPolicy& sigma, const Deviation& phi) {
  const std::size_t i = phi.agent();
  if (phi.is_time_indexed()) return value(game, induced_schedule(game, sigma, phi), i) - value(game, sigma, i);
  return value(game, induced_joint_policy(game, sigma, phi), i) - value(game, sigma, i);
}

struct BestResponse {
  Deviation deviation;  // time-indexed, one map per step
  double gain = 0.0;
  /// The game is time-layered, so the gain is also the best stationary gain.
  bool exact_stationary = false;
};

/**
 * Best-response deviation for agent i by backward induction on the process
 * augmented with i's private recommendation. W[s] holds the deviator's value
 * from step h onward, unnormalized by the recommendation marginal.
 */
inline BestResponse best_response_deviation(const MarkovGame& game, const MediatorPolicy& sigma, std::size_t agent) {
  require_shape(game, sigma);
  if (agent >= game.num_agents()) throw std::out_of_range("agent index out of range");
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  const std::size_t n = game.num_actions(agent);
  const auto& joint = game.joint_space();
  const auto r = game.reward_table(agent);

  std::vector<std::vector<std::size_t>> maps(H, std::vector<std::size_t>(S * n));
  std::vector<double> w_next(S, 0.0);
  std::vector<double> w(S, 0.0);
  std::vector<double> cand(n);
  for (std::size_t h = H; h-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      const auto row = sigma.row(s);
      double total = 0.0;
      for (std::size_t own = 0; own < n; ++own) {
        std::fill(cand.begin(), cand.end(), 0.0);
        for (std::size_t a = 0; a < A; ++a) {
          if (row[a] == 0.0 || joint.own(a, agent) != own) continue;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t c = joint.with_own(a, agent, b);
            double q = r[s * A + c];
            if (h + 1 < H) {
              const auto T = game.next_state_dist(s, c);
              for (std::size_t t = 0; t < S; ++t) q += T[t] * w_next[t];
            }
            cand[b] += row[a] * q;
          }
        }
        std::size_t best = own;
        for (std::size_t b = 0; b < n; ++b) {
          const double slack = kTieTolerance * std::max(1.0, std::abs(cand[best]));
          if (cand[b] > cand[best] + slack) best = b;
        }
        maps[h][s * n + own] = best;
        total += cand[best];
      }
      w[s] = total;
    }
    std::swap(w, w_next);
  }
  double deviated = 0.0;
  const auto rho0 = game.initial_dist();
  for (std::size_t s = 0; s < S; ++s) deviated += rho0[s] * w_next[s];

  BestResponse out;
  out.deviation = Deviation::time_indexed(agent, S, n, std::move(maps));
  out.gain = std::max(0.0, deviated - value(game, sigma, agent));
  out.exact_stationary = is_time_layered(game);
  return out;
}

/**
 * Collapse a time-indexed deviation on a time-layered game: each state takes
 * the map of the unique step at which it can occur (identity if never).
 */
inline Deviation collapse_to_stationary(const MarkovGame& game, const Deviation& phi) {
  if (!phi.is_time_indexed()) return phi;
  const auto reach = reachable_steps(game);
  const std::size_t n = phi.num_own_actions();
  auto out = Deviation::identity(phi.agent(), phi.num_states(), n);
  for (std::size_t s = 0; s < phi.num_states(); ++s) {
    std::optional<std::size_t> step;
    for (std::size_t h = 0; h < reach.size(); ++h) {
      if (!reach[h][s]) continue;
      if (step) throw std::invalid_argument("game is not time-layered");
      step = h;
    }
    if (!step) continue;
    for (std::size_t a = 0; a < n; ++a) out.set(0, s, a, phi.apply(*step, s, a));
  }
  return out;
}

/// Cap on |A_i|^(|S| |A_i|) for exhaustive stationary enumeration.
inline constexpr std::size_t kEnumerationCap = std::size_t(1) << 22;

inline std::optional<std::size_t> stationary_deviation_count(const MarkovGame& game, std::size_t agent) {
  const std::size_t n = game.num_actions(agent);
  const std::size_t entries = game.num_states() * n;
  std::size_t count = 1;
  for (std::size_t k = 0; k < entries; ++k) {
    if (count > kEnumerationCap / n) return std::nullopt;
    count *= n;
  }
  return count;
}

/// Calls f(phi) on every stationary deviation of `agent`, identity first.
template <class F>
void for_each_stationary_deviation(const MarkovGame& game, std::size_t agent, F&& f) {
  if (!stationary_deviation_count(game, agent)) {
    throw std::length_error("stationary deviation space exceeds the enumeration cap");
  }
  const std::size_t S = game.num_states();
  const std::size_t n = game.num_actions(agent);
  std::vector<std::size_t> digits(S * n, 0);
  std::vector<std::size_t> map(S * n);
  for (;;) {
    // digit k is the offset of phi(s, a) from a, so all-zero is the identity
    for (std::size_t k = 0; k < map.size(); ++k) map[k] = (k % n + digits[k]) % n;
    f(Deviation::stationary(agent, S, n, map));
    std::size_t k = 0;
    while (k < digits.size() && ++digits[k] == n) digits[k++] = 0;
    if (k == digits.size()) break;
  }
}

struct EnumeratedBest {
  Deviation deviation;
  double gain = 0.0;
};

/// Exhaustive max over stationary deviations; the reference for the DP.
inline EnumeratedBest stationary_enumeration_best(const MarkovGame& game, const MediatorPolicy& sigma,
                                                  std::size_t agent) {
  const double base = value(game, sigma, agent);
  EnumeratedBest best{Deviation::identity(game, agent), 0.0};
  for_each_stationary_deviation(game, agent, [&](const Deviation& phi) {
    const double g = value(game, induced_joint_policy(game, sigma, phi), agent) - base;
    if (g > best.gain) best = {phi, g};
  });
  return best;
}

struct DeviationGain {
  std::size_t agent = 0;
  /// Position in the agent's explicit list; npos for a complete class.
  std::size_t index = 0;
  double gain = 0.0;
};

inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

struct RegretReport {
  double regret = 0.0;
  std::size_t agent = 0;
  std::size_t deviation_index = kNoIndex;
  Deviation witness;
  /// False when some complete class was resolved on a non-layered game (upper bound).
  bool exact = true;
  std::vector<DeviationGain> gains;
};

/**
 * R_Phi(sigma). Explicit classes are enumerated; complete classes use the
 * best-response DP. The max is taken after all gains are collected, with the
 * lowest (agent, index) winning ties.
 */
inline RegretReport regret_report(const MarkovGame& game, const MediatorPolicy& sigma, const DeviationClass& phi) {
  if (phi.num_agents() != game.num_agents()) throw std::invalid_argument("deviation class agent count mismatch");
  RegretReport out;
  std::vector<Deviation> witnesses;
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    if (phi.is_complete(i)) {
      auto br = best_response_deviation(game, sigma, i);
      out.exact = out.exact && br.exact_stationary;
      out.gains.push_back({i, kNoIndex, br.gain});
      witnesses.push_back(std::move(br.deviation));
    } else {
      const auto& list = phi.deviations(i);
      for (std::size_t k = 0; k < list.size(); ++k) {
        out.gains.push_back({i, k, deviation_gain(game, sigma, list[k])});
        witnesses.push_back(list[k]);
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.gains.size(); ++k) {
    if (out.gains[k].gain > out.gains[best].gain) best = k;
  }
  out.regret = out.gains.empty() ? 0.0 : out.gains[best].gain;
  if (!out.gains.empty()) {
    out.agent = out.gains[best].agent;
    out.deviation_index = out.gains[best].index;
    out.witness = witnesses[best];
  }
  return out;
}

inline double regret(const MarkovGame& game, const MediatorPolicy& sigma, const DeviationClass& phi) {
  return regret_report(game, sigma, phi).regret;
}

/// max_i (J_i(pi_sigmaE) - J_i(pi_sigma)).
inline double value_gap(const MarkovGame& game, const MediatorPolicy& expert, const MediatorPolicy& sigma) {
  double gap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    gap = std::max(gap, value(game, expert, i) - value(game, sigma, i));
  }
  return gap;
}

inline double regret_gap(const MarkovGame& game, const MediatorPolicy& expert, const MediatorPolicy& sigma,
                         const DeviationClass& phi) {
  return regret(game, sigma, phi) - regret(game, expert, phi);
}

inline bool is_approx_ce(const MarkovGame& game, const MediatorPolicy& sigma, const DeviationClass& phi,
                         double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  return regret(game, sigma, phi) <= eps;
}

template <JointPolicy P>
double max_abs_advantage(const MarkovGame& game, const P& pi, std::size_t agent) {
  const auto tables = advantage_tensor(game, pi, agent);
  double u = 0.0;
  for (const auto& layer : tables.adv) {
    for (double x : layer) u = std::max(u, std::abs(x));
  }
  return u;
}

enum class RecoverabilityMode { best_response, stationary_enumeration };

/**
 * u = max |A_{i,h}^{pi_{sigmaE,phi_i}}(s,a)| over the class. A complete class
 * is covered either by identity plus the best-response deviation or by
 * exhaustive stationary enumeration.
 */
inline double recoverability_constant(const MarkovGame& game, const MediatorPolicy& expert, const DeviationClass& phi,
                                      RecoverabilityMode mode = RecoverabilityMode::best_response) {
  if (phi.num_agents() != game.num_agents()) throw std::invalid_argument("deviation class agent count mismatch");
  double u = 0.0;
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    if (!phi.is_complete(i)) {
      const auto& list = phi.deviations(i);
      if (list.empty()) throw std::invalid_argument("explicit deviation class is empty");
      for (const auto& dev : list) {
        u = std::max(u, max_abs_advantage(game, induced_schedule(game, expert, dev), i));
      }
    } else if (mode == RecoverabilityMode::best_response) {
      u = std::max(u, max_abs_advantage(game, expert, i));
      const auto br = best_response_deviation(game, expert, i);
      u = std::max(u, max_abs_advantage(game, induced_schedule(game, expert, br.deviation), i));
    } else {
      for_each_stationary_deviation(game, i, [&](const Deviation& dev) {
        u = std::max(u, max_abs_advantage(game, induced_joint_policy(game, expert, dev), i));
      });
    }
  }
  return u;
}

/**
 * Advantage bound over the complete reward class [-1,1]^{S x A}: since the
 * advantage is linear in the reward, its supremum at (h,s,a) is the L1 norm
 * of the difference in cumulative future occupancy between taking a and
 * following pi from (h,s).
 */
template <JointPolicy P>
double moment_recoverability(const MarkovGame& game, const P& pi) {
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  // future[h][s * A + a] = sum_{t >= h} rho_t given (s_h, a_h) = (s, a), flattened over (s', a')
  std::vector<std::vector<std::vector<double>>> future(H, std::vector<std::vector<double>>(S * A));
  double best = 0.0;
  std::vector<double> base(S * A);
  for (std::size_t h = H; h-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      const auto row = pi.row(h, s);
      std::fill(base.begin(), base.end(), 0.0);
      for (std::size_t a = 0; a < A; ++a) {
        auto& f = future[h][s * A + a];
        f.assign(S * A, 0.0);
        f[s * A + a] = 1.0;
        if (h + 1 < H) {
          const auto T = game.next_state_dist(s, a);
          for (std::size_t t = 0; t < S; ++t) {
            if (T[t] == 0.0) continue;
            const auto next_row = pi.row(h + 1, t);
            for (std::size_t b = 0; b < A; ++b) {
              const double w = T[t] * next_row[b];
              if (w == 0.0) continue;
              const auto& g = future[h + 1][t * A + b];
              for (std::size_t k = 0; k < S * A; ++k) f[k] += w * g[k];
            }
          }
        }
        for (std::size_t k = 0; k < S * A; ++k) base[k] += row[a] * f[k];
      }
      for (std::size_t a = 0; a < A; ++a) {
        const auto& f = future[h][s * A + a];
        double l1 = 0.0;
        for (std::size_t k = 0; k < S * A; ++k) l1 += std::abs(f[k] - base[k]);
        best = std::max(best, l1);
      }
    }
  }
  return best;
}

/// Moment recoverability over the expert, each explicit deviation, and best responses for complete classes.
inline double moment_recoverability_constant(const MarkovGame& game, const MediatorPolicy& expert,
                                             const DeviationClass& phi) {
  double u = moment_recoverability(game, expert);
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    if (phi.is_complete(i)) {
      const auto br = best_response_deviation(game, expert, i);
      u = std::max(u, moment_recoverability(game, induced_schedule(game, expert, br.deviation)));
    } else {
      for (const auto& dev : phi.deviations(i)) {
        u = std::max(u, moment_recoverability(game, induced_schedule(game, expert, dev)));
      }
    }
  }
  return u;
}

}  // namespace mailab
