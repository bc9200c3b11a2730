#pragma once

// Brute-force reference computations for tests. Nothing here calls the
// library's DP, occupancy or induced-policy code.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mailab/mailab.hpp"

namespace oracle {

using RowFn = std::function<std::span<const double>(std::size_t h, std::size_t s)>;

inline RowFn rows_of(const mailab::MediatorPolicy& p) {
  return [&p](std::size_t, std::size_t s) { return p.row(s); };
}

/// Own action of `agent` in a row-major joint index (agent 0 most significant).
inline std::size_t own_action(const mailab::MarkovGame& g, std::size_t joint, std::size_t agent) {
  std::vector<std::size_t> digits(g.num_agents());
  for (std::size_t k = g.num_agents(); k-- > 0;) {
    digits[k] = joint % g.num_actions(k);
    joint /= g.num_actions(k);
  }
  return digits[agent];
}

inline std::size_t replace_own(const mailab::MarkovGame& g, std::size_t joint, std::size_t agent, std::size_t b) {
  std::vector<std::size_t> digits(g.num_agents());
  for (std::size_t k = g.num_agents(); k-- > 0;) {
    digits[k] = joint % g.num_actions(k);
    joint /= g.num_actions(k);
  }
  digits[agent] = b;
  std::size_t out = 0;
  for (std::size_t k = 0; k < g.num_agents(); ++k) out = out * g.num_actions(k) + digits[k];
  return out;
}

/// A deviation as a plain function (h, s, recommended own) -> played own.
struct DeviationFn {
  std::size_t agent = 0;
  std::function<std::size_t(std::size_t, std::size_t, std::size_t)> map;
};

struct PathStats {
  std::vector<std::vector<double>> d_step;    // [h][s]
  std::vector<std::vector<double>> rho_step;  // [h][s * A + played]
  std::vector<double> values;                 // per agent
};

/// Exhaustive trajectory enumeration; exponential, for tiny games only.
inline PathStats enumerate_paths(const mailab::MarkovGame& g, const RowFn& rows, const DeviationFn* dev = nullptr) {
  const std::size_t H = g.horizon(), S = g.num_states(), A = g.num_joint_actions(), m = g.num_agents();
  PathStats out;
  out.d_step.assign(H, std::vector<double>(S, 0.0));
  out.rho_step.assign(H, std::vector<double>(S * A, 0.0));
  out.values.assign(m, 0.0);
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t h, std::size_t s, double p) {
    out.d_step[h][s] += p;
    const auto row = rows(h, s);
    for (std::size_t a = 0; a < A; ++a) {
      if (row[a] == 0.0) continue;
      std::size_t played = a;
      if (dev) played = replace_own(g, a, dev->agent, dev->map(h, s, own_action(g, a, dev->agent)));
      const double q = p * row[a];
      out.rho_step[h][s * A + played] += q;
      for (std::size_t i = 0; i < m; ++i) out.values[i] += q * g.reward(i, s, played);
      if (h + 1 == H) continue;
      for (std::size_t t = 0; t < S; ++t) {
        const double pt = g.transition(s, played, t);
        if (pt > 0.0) walk(h + 1, t, q * pt);
      }
    }
  };
  for (std::size_t s = 0; s < S; ++s) {
    if (g.initial_dist()[s] > 0.0) walk(0, s, g.initial_dist()[s]);
  }
  return out;
}

inline DeviationFn as_fn(const mailab::Deviation& phi) {
  return {phi.agent(), [&phi](std::size_t h, std::size_t s, std::size_t a) { return phi.apply(h, s, a); }};
}

/**
 * max over every time-indexed deviation of agent i (all maps per step),
 * by enumeration. Returns the best deviated value.
 */
inline double best_deviated_value(const mailab::MarkovGame& g, const mailab::MediatorPolicy& sigma, std::size_t agent) {
  const std::size_t H = g.horizon(), S = g.num_states(), n = g.num_actions(agent);
  const std::size_t entries = H * S * n;
  std::vector<std::size_t> digits(entries, 0);
  double best = -std::numeric_limits<double>::infinity();
  for (;;) {
    DeviationFn dev{agent, [&](std::size_t h, std::size_t s, std::size_t a) { return digits[(h * S + s) * n + a]; }};
    best = std::max(best, enumerate_paths(g, rows_of(sigma), &dev).values[agent]);
    std::size_t k = 0;
    while (k < entries && ++digits[k] == n) digits[k++] = 0;
    if (k == entries) break;
  }
  return best;
}

/// sup over f in {-1,1}^{S x A} of (E_E - E_sigma)[sum_h f]/H, by enumeration of sign vectors.
inline double sign_vector_moment(const mailab::MarkovGame& g, const mailab::MediatorPolicy& expert,
                                 const mailab::MediatorPolicy& sigma) {
  const std::size_t SA = g.num_states() * g.num_joint_actions();
  const auto pe = enumerate_paths(g, rows_of(expert));
  const auto ps = enumerate_paths(g, rows_of(sigma));
  std::vector<double> diff(SA, 0.0);
  for (std::size_t h = 0; h < g.horizon(); ++h) {
    for (std::size_t k = 0; k < SA; ++k) diff[k] += pe.rho_step[h][k] - ps.rho_step[h][k];
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t(1) << SA); ++mask) {
    double v = 0.0;
    for (std::size_t k = 0; k < SA; ++k) v += ((mask >> k) & 1u ? 1.0 : -1.0) * diff[k];
    best = std::max(best, v);
  }
  return best / double(g.horizon());
}

}  // namespace oracle
