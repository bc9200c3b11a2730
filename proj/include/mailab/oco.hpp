#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mailab/losses.hpp"

namespace mailab {

enum class UpdateRule { exponentiated_gradient, projected_subgradient };

inline const char* to_string(UpdateRule rule) {
  return rule == UpdateRule::exponentiated_gradient ? "eg" : "pgd";
}

struct OCOConfig {
  std::size_t rounds = 500;
  UpdateRule rule = UpdateRule::exponentiated_gradient;
  /// eta_n = rate_scale * sqrt(ln|A| / n) for EG, rate_scale / sqrt(n) for PGD.
  double rate_scale = 1.0;
  /// Uniform mass mixed into the EG prior so zero entries of the start can recover.
  double prior_mix = 1e-3;
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::size_t round = 0;
  double loss = 0.0;
  DeviationLabel achieving;
  double step_size = 0.0;
};

struct OCORun {
  std::vector<MediatorPolicy> iterates;  // sigma^(1..N)
  std::vector<TraceRow> trace;           // loss^(n) evaluated at sigma^(n)
};

/// Builds the round-n loss from the round index (1-based) and the current iterate.
using LossBuilder = std::function<CompositeMaxLoss(std::size_t, const MediatorPolicy&)>;

/// Euclidean projection onto the probability simplex (sort-based).
inline void project_to_simplex(std::span<double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double acc = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    acc += u[k];
    const double t = (acc - 1.0) / double(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (auto& x : v) x = std::max(0.0, x - theta);
}

inline double step_size(const OCOConfig& config, std::size_t round, std::size_t num_joint) {
  const double n = double(round);
  if (config.rule == UpdateRule::exponentiated_gradient) {
    return config.rate_scale * std::sqrt(std::log(double(std::max<std::size_t>(num_joint, 2))) / n);
  }
  return config.rate_scale / std::sqrt(n);
}

/**
 * Per-state online learner over the product of joint-action simplices.
 *
 * EG is lazy entropic FTRL: row n+1 is proportional to
 * prior(a) exp(-eta_{n+1} G_n(a)) with G_n the cumulative subgradient and the
 * prior the start row mixed with uniform; a row whose G_n is identically zero
 * keeps the start row exactly. PGD takes a projected step from the current
 * iterate and leaves rows with a zero subgradient untouched.
 */
inline OCORun oco_run(const MediatorPolicy& initial, const LossBuilder& build, const OCOConfig& config) {
  if (config.rounds == 0) throw std::invalid_argument("OCO needs at least one round");
  if (!(config.rate_scale > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(config.prior_mix >= 0.0 && config.prior_mix <= 1.0)) throw std::invalid_argument("prior_mix must be in [0,1]");
  const std::size_t S = initial.num_states();
  const std::size_t A = initial.num_joint();

  MediatorPolicy prior = initial;
  for (auto& x : prior.mutable_table()) {
    x = (1.0 - config.prior_mix) * x + config.prior_mix / double(A);
  }
  std::vector<double> cumulative(S * A, 0.0);
  std::vector<double> logits(A);

  OCORun run;
  run.iterates.reserve(config.rounds);
  run.trace.reserve(config.rounds);
  MediatorPolicy current = initial;
  for (std::size_t n = 1; n <= config.rounds; ++n) {
    const auto loss = build(n, current);
    const auto value = loss.evaluate(current);
    // EG plays eta_{n+1} on G_n (anytime FTRL); PGD steps from sigma^(n) with eta_n.
    const bool eg = config.rule == UpdateRule::exponentiated_gradient;
    const double eta = step_size(config, eg ? n + 1 : n, A);
    run.trace.push_back({n, value.value, loss.label(value.component), eta});
    const auto g = loss.component(value.component).subgradient(current);
    run.iterates.push_back(current);
    if (n == config.rounds) break;

    if (eg) {
      for (std::size_t k = 0; k < g.size(); ++k) cumulative[k] += g[k];
      for (std::size_t s = 0; s < S; ++s) {
        const std::span<const double> G(cumulative.data() + s * A, A);
        if (std::all_of(G.begin(), G.end(), [](double x) { return x == 0.0; })) {
          current.set_row(s, initial.row(s));
          continue;
        }
        const auto p = prior.row(s);
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
          logits[a] = p[a] > 0.0 ? std::log(p[a]) - eta * G[a] : -std::numeric_limits<double>::infinity();
          top = std::max(top, logits[a]);
        }
        double z = 0.0;
        auto row = current.row(s);
        for (std::size_t a = 0; a < A; ++a) {
          row[a] = std::exp(logits[a] - top);
          z += row[a];
        }
        for (auto& x : row) x /= z;
      }
    } else {
      for (std::size_t s = 0; s < S; ++s) {
        const std::span<const double> gs(g.data() + s * A, A);
        if (std::all_of(gs.begin(), gs.end(), [](double x) { return x == 0.0; })) continue;
        auto row = current.row(s);
        for (std::size_t a = 0; a < A; ++a) row[a] -= eta * gs[a];
        project_to_simplex(row);
      }
    }
  }
  return run;
}

/// Fixed loss sequence convenience wrapper.
inline OCORun oco_run(const MediatorPolicy& initial, const std::vector<CompositeMaxLoss>& sequence,
                      const OCOConfig& config) {
  if (sequence.empty()) throw std::invalid_argument("empty loss sequence");
  return oco_run(
      initial, [&](std::size_t n, const MediatorPolicy&) { return sequence[(n - 1) % sequence.size()]; }, config);
}

}  // namespace mailab
