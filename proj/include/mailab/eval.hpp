#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mailab/policy.hpp"

namespace mailab {

/// State and state-action occupancies, per step and time-averaged.
struct OccupancyBundle {
  std::size_t horizon = 0;
  std::size_t num_states = 0;
  std::size_t num_joint = 0;
  std::vector<std::vector<double>> d_step;    // [h][s]
  std::vector<double> d;                      // [s]
  std::vector<std::vector<double>> rho_step;  // [h][s * |A| + a]
  std::vector<double> rho;                    // [s * |A| + a]
};

namespace detail {

template <JointPolicy P>
void require_policy_shape(const MarkovGame& game, const P& pi) {
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    if (pi.row(0, s).size() != game.num_joint_actions()) {
      throw std::invalid_argument("policy row width does not match the joint action space");
    }
  }
}

}  // namespace detail

template <JointPolicy P>
OccupancyBundle occupancy_bundle(const MarkovGame& game, const P& pi) {
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  detail::require_policy_shape(game, pi);

  OccupancyBundle out;
  out.horizon = H;
  out.num_states = S;
  out.num_joint = A;
  out.d_step.assign(H, std::vector<double>(S, 0.0));
  out.rho_step.assign(H, std::vector<double>(S * A, 0.0));
  out.d.assign(S, 0.0);
  out.rho.assign(S * A, 0.0);

  const auto rho0 = game.initial_dist();
  std::copy(rho0.begin(), rho0.end(), out.d_step[0].begin());
  for (std::size_t h = 0; h < H; ++h) {
    const auto& dh = out.d_step[h];
    auto& rh = out.rho_step[h];
    for (std::size_t s = 0; s < S; ++s) {
      if (dh[s] == 0.0) continue;
      const auto row = pi.row(h, s);
      for (std::size_t a = 0; a < A; ++a) rh[s * A + a] = dh[s] * row[a];
    }
    if (h + 1 == H) break;
    auto& next = out.d_step[h + 1];
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const double mass = rh[s * A + a];
        if (mass == 0.0) continue;
        const auto T = game.next_state_dist(s, a);
        for (std::size_t t = 0; t < S; ++t) next[t] += mass * T[t];
      }
    }
  }
  const double inv = 1.0 / double(H);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) out.d[s] += inv * out.d_step[h][s];
    for (std::size_t k = 0; k < S * A; ++k) out.rho[k] += inv * out.rho_step[h][k];
  }
  return out;
}

/// Q, V and A = Q - V per step for one agent; V at step H is zero.
struct ValueTables {
  std::vector<std::vector<double>> q;    // [h][s * |A| + a]
  std::vector<std::vector<double>> v;    // [h][s]
  std::vector<std::vector<double>> adv;  // [h][s * |A| + a]
};

/// Backward DP over `rewards` laid out [s * |A| + a].
template <JointPolicy P>
ValueTables value_tables(const MarkovGame& game, const P& pi, std::span<const double> rewards) {
  const std::size_t H = game.horizon();
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  detail::require_policy_shape(game, pi);
  if (rewards.size() != S * A) throw std::invalid_argument("reward table has wrong shape");

  ValueTables out;
  out.q.assign(H, std::vector<double>(S * A, 0.0));
  out.v.assign(H, std::vector<double>(S, 0.0));
  out.adv.assign(H, std::vector<double>(S * A, 0.0));
  for (std::size_t h = H; h-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      const auto row = pi.row(h, s);
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        double q = rewards[s * A + a];
        if (h + 1 < H) {
          const auto T = game.next_state_dist(s, a);
          const auto& vn = out.v[h + 1];
          for (std::size_t t = 0; t < S; ++t) q += T[t] * vn[t];
        }
        out.q[h][s * A + a] = q;
        v += row[a] * q;
      }
      out.v[h][s] = v;
      for (std::size_t a = 0; a < A; ++a) out.adv[h][s * A + a] = out.q[h][s * A + a] - v;
    }
  }
  return out;
}

template <JointPolicy P>
ValueTables advantage_tensor(const MarkovGame& game, const P& pi, std::size_t agent) {
  return value_tables(game, pi, game.reward_table(agent));
}

/// J_i(pi) by backward DP.
template <JointPolicy P>
double value(const MarkovGame& game, const P& pi, std::size_t agent) {
  const auto tables = advantage_tensor(game, pi, agent);
  const auto rho0 = game.initial_dist();
  double j = 0.0;
  for (std::size_t s = 0; s < rho0.size(); ++s) j += rho0[s] * tables.v[0][s];
  return j;
}

template <JointPolicy P>
std::vector<double> values(const MarkovGame& game, const P& pi) {
  std::vector<double> out(game.num_agents());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(game, pi, i);
  return out;
}

/// H * <rho, r_i>; equals value() up to rounding.
inline double value_from_occupancy(const MarkovGame& game, const OccupancyBundle& occ, std::size_t agent) {
  const auto r = game.reward_table(agent);
  double acc = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) acc += occ.rho[k] * r[k];
  return double(game.horizon()) * acc;
}

inline double tv(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv: length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - q[k]);
  return 0.5 * acc;
}

inline void require_distribution(std::span<const double> weights, const char* what) {
  if (auto why = detail::check_distribution(weights); !why.empty()) {
    throw std::invalid_argument(std::string(what) + " is not a distribution: " + why);
  }
}

/// sum_s w(s) TV(target(s), sigma(s)).
inline double weighted_tv_loss(const MediatorPolicy& target, const MediatorPolicy& sigma,
                               std::span<const double> weights) {
  if (target.num_states() != sigma.num_states() || target.num_joint() != sigma.num_joint() ||
      weights.size() != sigma.num_states()) {
    throw std::invalid_argument("weighted_tv_loss: shape mismatch");
  }
  require_distribution(weights, "weights");
  double acc = 0.0;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    if (weights[s] == 0.0) continue;
    acc += weights[s] * tv(target.row(s), sigma.row(s));
  }
  return acc;
}

/// L1 distance between averaged occupancies.
inline double occupancy_l1(const OccupancyBundle& a, const OccupancyBundle& b) {
  if (a.rho.size() != b.rho.size()) throw std::invalid_argument("occupancy shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.rho.size(); ++k) acc += std::abs(a.rho[k] - b.rho[k]);
  return acc;
}

/// Occupancy L1 distance; the unnormalized form multiplies by H.
template <JointPolicy P, JointPolicy Q>
double moment_matching_error(const MarkovGame& game, const P& expert, const Q& sigma, bool normalized = true) {
  const double l1 = occupancy_l1(occupancy_bundle(game, expert), occupancy_bundle(game, sigma));
  return normalized ? l1 : l1 * double(game.horizon());
}

/// beta = min_s d^{pi_sigmaE}(s).
inline double coverage_constant(const MarkovGame& game, const MediatorPolicy& expert) {
  const auto occ = occupancy_bundle(game, expert);
  return *std::min_element(occ.d.begin(), occ.d.end());
}

/**
 * Stationary policy with the same averaged occupancy as `pi`:
 * sigma(a|s) = sum_h rho_h(s,a) / sum_h d_h(s), uniform where d(s) = 0.
 */
template <JointPolicy P>
MediatorPolicy stationarize(const MarkovGame& game, const P& pi) {
  const auto occ = occupancy_bundle(game, pi);
  const std::size_t A = game.num_joint_actions();
  MediatorPolicy out(game.num_states(), A);
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    auto row = out.row(s);
    if (occ.d[s] > 0.0) {
      double sum = 0.0;
      for (std::size_t a = 0; a < A; ++a) sum += occ.rho[s * A + a];
      for (std::size_t a = 0; a < A; ++a) row[a] = occ.rho[s * A + a] / sum;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / double(A));
    }
  }
  return out;
}

}  // namespace mailab
