#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mailab/policy.hpp"

namespace mailab {

/// SplitMix64 finalizer; used to derive independent seeds from (base, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ (index * 0xD1B54A32D192ED03ULL));
}

/**
 * Portable random source: std::mt19937_64 (fully specified by the standard)
 * with our own conversions, since std::uniform_real_distribution and
 * std::discrete_distribution are implementation-defined.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next() { return engine_(); }

  /// Index below `n`; modulo bias is irrelevant at desk-scale n.
  std::size_t index(std::size_t n) { return std::size_t(engine_() % n); }

  /// Inverse-CDF draw by running sum; falls back to the last positive entry.
  std::size_t categorical(std::span<const double> p) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last = p.size();
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] <= 0.0) continue;
      acc += p[k];
      last = k;
      if (u < acc) return k;
    }
    if (last == p.size()) throw std::invalid_argument("categorical draw from an all-zero vector");
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

struct Step {
  std::size_t state = 0;
  std::size_t joint = 0;
  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::vector<Step> steps;
  bool operator==(const Trajectory&) const = default;
};

struct DemonstrationSet {
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;

  [[nodiscard]] bool empty() const noexcept { return trajectories.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
};

template <JointPolicy P>
Trajectory sample_trajectory(const MarkovGame& game, const P& pi, Rng& rng) {
  Trajectory traj;
  traj.steps.reserve(game.horizon());
  std::size_t s = rng.categorical(game.initial_dist());
  for (std::size_t h = 0; h < game.horizon(); ++h) {
    const std::size_t a = rng.categorical(pi.row(h, s));
    traj.steps.push_back({s, a});
    if (h + 1 < game.horizon()) s = rng.categorical(game.next_state_dist(s, a));
  }
  return traj;
}

template <JointPolicy P>
Trajectory sample_trajectory(const MarkovGame& game, const P& pi, std::uint64_t seed) {
  Rng rng(seed);
  return sample_trajectory(game, pi, rng);
}

/// n i.i.d. trajectories drawn sequentially from one generator seeded by `seed`.
template <JointPolicy P>
DemonstrationSet sample_demonstrations(const MarkovGame& game, const P& pi, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("demonstration count must be at least 1");
  DemonstrationSet out;
  out.seed = seed;
  out.trajectories.reserve(n);
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) out.trajectories.push_back(sample_trajectory(game, pi, rng));
  return out;
}

/// Empirical per-step state frequencies, [h][s].
inline std::vector<std::vector<double>> empirical_step_distributions(const MarkovGame& game,
                                                                     const DemonstrationSet& demos) {
  std::vector<std::vector<double>> d(game.horizon(), std::vector<double>(game.num_states(), 0.0));
  if (demos.empty()) return d;
  const double w = 1.0 / double(demos.size());
  for (const auto& traj : demos.trajectories) {
    for (std::size_t h = 0; h < traj.steps.size(); ++h) d[h][traj.steps[h].state] += w;
  }
  return d;
}

/// Empirical time-averaged state distribution (1/H) sum_h d_h.
inline std::vector<double> empirical_state_distribution(const MarkovGame& game, const DemonstrationSet& demos) {
  std::vector<double> d(game.num_states(), 0.0);
  std::size_t total = 0;
  for (const auto& traj : demos.trajectories) {
    for (const auto& step : traj.steps) d[step.state] += 1.0;
    total += traj.steps.size();
  }
  if (total > 0) {
    for (auto& x : d) x /= double(total);
  }
  return d;
}

/// Visit counts per (state, joint action).
struct EmpiricalCounts {
  std::vector<double> state;  // [s]
  std::vector<double> joint;  // [s * |A| + a]
};

inline EmpiricalCounts empirical_counts(const MarkovGame& game, const DemonstrationSet& demos) {
  const std::size_t A = game.num_joint_actions();
  EmpiricalCounts c{std::vector<double>(game.num_states(), 0.0),
                    std::vector<double>(game.num_states() * A, 0.0)};
  for (const auto& traj : demos.trajectories) {
    for (const auto& step : traj.steps) {
      c.state[step.state] += 1.0;
      c.joint[step.state * A + step.joint] += 1.0;
    }
  }
  return c;
}

}  // namespace mailab
