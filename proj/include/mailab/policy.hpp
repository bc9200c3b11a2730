#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mailab/game.hpp"

namespace mailab {

/**
 * Markovian joint policy sigma(a | s): one distribution over joint actions per
 * state. Also used for the induced agent policies pi_sigma and pi_{sigma,phi}.
 */
class MediatorPolicy {
 public:
  MediatorPolicy() = default;

  /// All-zero table; callers fill rows before use.
  MediatorPolicy(std::size_t num_states, std::size_t num_joint)
      : num_states_(num_states), num_joint_(num_joint), table_(num_states * num_joint, 0.0) {}

  MediatorPolicy(std::size_t num_states, std::size_t num_joint, std::vector<double> table)
      : num_states_(num_states), num_joint_(num_joint), table_(std::move(table)) {
    if (table_.size() != num_states_ * num_joint_) {
      throw std::invalid_argument("policy table has wrong shape");
    }
  }

  static MediatorPolicy uniform(const MarkovGame& game) {
    const auto A = game.num_joint_actions();
    return {game.num_states(), A, std::vector<double>(game.num_states() * A, 1.0 / double(A))};
  }

  /// Deterministic policy playing joint action choice[s] in state s.
  static MediatorPolicy deterministic(const MarkovGame& game, std::span<const std::size_t> choice) {
    if (choice.size() != game.num_states()) throw std::invalid_argument("one joint action per state");
    MediatorPolicy p(game.num_states(), game.num_joint_actions());
    for (std::size_t s = 0; s < choice.size(); ++s) p.at(s, choice[s]) = 1.0;
    return p;
  }

  [[nodiscard]] std::size_t num_states() const noexcept { return num_states_; }
  [[nodiscard]] std::size_t num_joint() const noexcept { return num_joint_; }
  [[nodiscard]] const std::vector<double>& table() const noexcept { return table_; }
  [[nodiscard]] std::vector<double>& mutable_table() noexcept { return table_; }

  [[nodiscard]] std::span<const double> row(std::size_t s) const {
    return {table_.data() + s * num_joint_, num_joint_};
  }
  [[nodiscard]] std::span<double> row(std::size_t s) { return {table_.data() + s * num_joint_, num_joint_}; }

  /// Step-indexed access so stationary and time-indexed policies share evaluators.
  [[nodiscard]] std::span<const double> row(std::size_t /*step*/, std::size_t s) const { return row(s); }

  [[nodiscard]] double operator()(std::size_t s, std::size_t joint) const {
    return table_[s * num_joint_ + joint];
  }
  [[nodiscard]] double& at(std::size_t s, std::size_t joint) { return table_[s * num_joint_ + joint]; }
  [[nodiscard]] double at(std::size_t s, std::size_t joint) const { return table_[s * num_joint_ + joint]; }

  void set_row(std::size_t s, std::span<const double> values) {
    if (values.size() != num_joint_) throw std::invalid_argument("row length mismatch");
    std::copy(values.begin(), values.end(), row(s).begin());
  }

  bool operator==(const MediatorPolicy&) const = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_joint_ = 0;
  std::vector<double> table_;
};

/// One stationary table per step; produced by time-indexed deviations and DP.
class TimeIndexedPolicy {
 public:
  TimeIndexedPolicy() = default;
  explicit TimeIndexedPolicy(std::vector<MediatorPolicy> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw std::invalid_argument("time-indexed policy needs at least one step");
  }

  [[nodiscard]] std::span<const double> row(std::size_t step, std::size_t s) const {
    return steps_[std::min(step, steps_.size() - 1)].row(s);
  }
  [[nodiscard]] std::size_t num_steps() const noexcept { return steps_.size(); }
  [[nodiscard]] const MediatorPolicy& step(std::size_t h) const { return steps_.at(h); }
  [[nodiscard]] MediatorPolicy& step(std::size_t h) { return steps_.at(h); }
  [[nodiscard]] std::size_t num_states() const { return steps_.front().num_states(); }
  [[nodiscard]] std::size_t num_joint() const { return steps_.front().num_joint(); }

 private:
  std::vector<MediatorPolicy> steps_;
};

/// Anything exposing a per-step, per-state distribution over joint actions.
template <class P>
concept JointPolicy = requires(const P& p, std::size_t h, std::size_t s) {
  { p.row(h, s) } -> std::convertible_to<std::span<const double>>;
};

/// Violations of the per-row simplex invariant; empty when valid for `game`.
inline std::vector<std::string> validate_policy(const MarkovGame& game, const MediatorPolicy& policy) {
  std::vector<std::string> out;
  if (policy.num_states() != game.num_states() || policy.num_joint() != game.num_joint_actions()) {
    out.emplace_back("policy shape does not match game");
    return out;
  }
  for (std::size_t s = 0; s < policy.num_states(); ++s) {
    if (auto why = detail::check_distribution(policy.row(s)); !why.empty()) {
      out.push_back("row " + std::to_string(s) + ": " + why);
    }
  }
  return out;
}

inline void require_shape(const MarkovGame& game, const MediatorPolicy& policy) {
  if (policy.num_states() != game.num_states() || policy.num_joint() != game.num_joint_actions()) {
    throw std::invalid_argument("policy shape does not match game");
  }
}

/**
 * Strategy deviation phi_i : S x A_i -> A_i for one agent, either stationary or
 * with one map per step. Maps are stored densely so the deviation is total.
 */
class Deviation {
 public:
  Deviation() = default;

  static Deviation identity(const MarkovGame& game, std::size_t agent) {
    return identity(agent, game.num_states(), game.num_actions(agent));
  }

  static Deviation identity(std::size_t agent, std::size_t num_states, std::size_t num_own) {
    std::vector<std::size_t> map(num_states * num_own);
    for (std::size_t k = 0; k < map.size(); ++k) map[k] = k % num_own;
    return Deviation(agent, num_states, num_own, {std::move(map)}, false);
  }

  /// `map[s * |A_i| + a]` is the action played when `a` is recommended in `s`.
  static Deviation stationary(std::size_t agent, std::size_t num_states, std::size_t num_own,
                              std::vector<std::size_t> map) {
    return Deviation(agent, num_states, num_own, {std::move(map)}, false);
  }

  static Deviation time_indexed(std::size_t agent, std::size_t num_states, std::size_t num_own,
                                std::vector<std::vector<std::size_t>> maps) {
    return Deviation(agent, num_states, num_own, std::move(maps), true);
  }

  [[nodiscard]] std::size_t agent() const noexcept { return agent_; }
  [[nodiscard]] bool is_time_indexed() const noexcept { return time_indexed_; }
  [[nodiscard]] std::size_t num_states() const noexcept { return num_states_; }
  [[nodiscard]] std::size_t num_own_actions() const noexcept { return num_own_; }
  [[nodiscard]] std::size_t num_layers() const noexcept { return maps_.size(); }

  [[nodiscard]] std::size_t apply(std::size_t step, std::size_t s, std::size_t own) const {
    const auto& layer = maps_[time_indexed_ ? std::min(step, maps_.size() - 1) : 0];
    return layer[s * num_own_ + own];
  }

  /// Overwrite one entry (stationary: `step` is ignored).
  void set(std::size_t step, std::size_t s, std::size_t own, std::size_t played) {
    if (played >= num_own_ || own >= num_own_ || s >= num_states_) {
      throw std::out_of_range("deviation entry out of range");
    }
    maps_[time_indexed_ ? step : 0][s * num_own_ + own] = played;
  }

  [[nodiscard]] bool is_identity() const {
    for (const auto& layer : maps_) {
      for (std::size_t k = 0; k < layer.size(); ++k) {
        if (layer[k] != k % num_own_) return false;
      }
    }
    return true;
  }

  [[nodiscard]] const std::vector<std::vector<std::size_t>>& maps() const noexcept { return maps_; }

  bool operator==(const Deviation&) const = default;

 private:
  Deviation(std::size_t agent, std::size_t num_states, std::size_t num_own,
            std::vector<std::vector<std::size_t>> maps, bool time_indexed)
      : agent_(agent), num_states_(num_states), num_own_(num_own), maps_(std::move(maps)),
        time_indexed_(time_indexed) {
    if (maps_.empty()) throw std::invalid_argument("deviation needs at least one map");
    for (const auto& layer : maps_) {
      if (layer.size() != num_states_ * num_own_) throw std::invalid_argument("deviation map is not total");
      for (auto b : layer) {
        if (b >= num_own_) throw std::out_of_range("deviation maps outside the agent's action set");
      }
    }
  }

  std::size_t agent_ = 0;
  std::size_t num_states_ = 0;
  std::size_t num_own_ = 0;
  std::vector<std::vector<std::size_t>> maps_;
  bool time_indexed_ = false;
};

/// Marker for Phi_i = all maps S x A_i -> A_i.
struct CompleteDeviations {
  bool operator==(const CompleteDeviations&) const = default;
};

using AgentDeviations = std::variant<CompleteDeviations, std::vector<Deviation>>;

/// Per-agent deviation classes Phi = {Phi_i}.
class DeviationClass {
 public:
  DeviationClass() = default;

  /// Explicit lists must contain the identity deviation of their agent.
  explicit DeviationClass(std::vector<AgentDeviations> per_agent) : per_agent_(std::move(per_agent)) {
    for (std::size_t i = 0; i < per_agent_.size(); ++i) {
      if (const auto* list = std::get_if<std::vector<Deviation>>(&per_agent_[i])) {
        if (list->empty()) throw std::invalid_argument("explicit deviation class is empty");
        bool has_identity = false;
        for (const auto& phi : *list) {
          if (phi.agent() != i) throw std::invalid_argument("deviation filed under the wrong agent");
          has_identity = has_identity || phi.is_identity();
        }
        if (!has_identity) throw std::invalid_argument("explicit deviation class lacks the identity");
      }
    }
  }

  static DeviationClass complete(std::size_t num_agents) {
    return DeviationClass(std::vector<AgentDeviations>(num_agents, CompleteDeviations{}));
  }

  static DeviationClass identity_only(const MarkovGame& game) {
    std::vector<AgentDeviations> per;
    for (std::size_t i = 0; i < game.num_agents(); ++i) {
      per.emplace_back(std::vector<Deviation>{Deviation::identity(game, i)});
    }
    return DeviationClass(std::move(per));
  }

  /**
   * Identity plus every "always play b when told a" swap, one per ordered pair
   * (a, b) with a != b, applied uniformly across states.
   */
  static DeviationClass swap_class(const MarkovGame& game) {
    std::vector<AgentDeviations> per;
    for (std::size_t i = 0; i < game.num_agents(); ++i) {
      const std::size_t n = game.num_actions(i);
      std::vector<Deviation> list{Deviation::identity(game, i)};
      for (std::size_t from = 0; from < n; ++from) {
        for (std::size_t to = 0; to < n; ++to) {
          if (from == to) continue;
          auto phi = Deviation::identity(game, i);
          for (std::size_t s = 0; s < game.num_states(); ++s) phi.set(0, s, from, to);
          list.push_back(std::move(phi));
        }
      }
      per.emplace_back(std::move(list));
    }
    return DeviationClass(std::move(per));
  }

  [[nodiscard]] std::size_t num_agents() const noexcept { return per_agent_.size(); }
  [[nodiscard]] bool is_complete(std::size_t agent) const {
    return std::holds_alternative<CompleteDeviations>(per_agent_.at(agent));
  }
  [[nodiscard]] bool all_explicit() const {
    for (std::size_t i = 0; i < per_agent_.size(); ++i) {
      if (is_complete(i)) return false;
    }
    return true;
  }
  [[nodiscard]] const std::vector<Deviation>& deviations(std::size_t agent) const {
    const auto* list = std::get_if<std::vector<Deviation>>(&per_agent_.at(agent));
    if (list == nullptr) throw std::logic_error("agent has the complete deviation class");
    return *list;
  }
  [[nodiscard]] std::size_t explicit_size() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < per_agent_.size(); ++i) {
      if (!is_complete(i)) n += deviations(i).size();
    }
    return n;
  }

 private:
  std::vector<AgentDeviations> per_agent_;
};

/**
 * pi_{sigma,phi_i}: agent i filters its private recommendation through phi_i
 * while every other agent obeys. Correlation with the others' recommendations
 * is preserved because mass moves between joint actions that agree on a_{-i}.
 * For a time-indexed deviation, `step` selects the map.
 */
inline MediatorPolicy induced_joint_policy(const MarkovGame& game, const MediatorPolicy& sigma,
                                           const Deviation& phi, std::size_t step = 0) {
  require_shape(game, sigma);
  const std::size_t i = phi.agent();
  if (i >= game.num_agents() || phi.num_states() != game.num_states() ||
      phi.num_own_actions() != game.num_actions(i)) {
    throw std::invalid_argument("deviation shape does not match game");
  }
  const auto& joint = game.joint_space();
  MediatorPolicy out(sigma.num_states(), sigma.num_joint());
  for (std::size_t s = 0; s < sigma.num_states(); ++s) {
    const auto in = sigma.row(s);
    auto dst = out.row(s);
    for (std::size_t a = 0; a < in.size(); ++a) {
      if (in[a] == 0.0) continue;
      const std::size_t played = phi.apply(step, s, joint.own(a, i));
      dst[joint.with_own(a, i, played)] += in[a];
    }
  }
  return out;
}

/// Per-step induced policies; a stationary deviation yields a single layer.
inline TimeIndexedPolicy induced_schedule(const MarkovGame& game, const MediatorPolicy& sigma,
                                          const Deviation& phi) {
  std::vector<MediatorPolicy> steps;
  const std::size_t layers = phi.is_time_indexed() ? game.horizon() : 1;
  steps.reserve(layers);
  for (std::size_t h = 0; h < layers; ++h) steps.push_back(induced_joint_policy(game, sigma, phi, h));
  return TimeIndexedPolicy(std::move(steps));
}

/// Marginal of agent i's recommendation at state s.
inline std::vector<double> own_marginal(const MarkovGame& game, std::span<const double> row, std::size_t agent) {
  std::vector<double> out(game.num_actions(agent), 0.0);
  const auto& joint = game.joint_space();
  for (std::size_t a = 0; a < row.size(); ++a) out[joint.own(a, agent)] += row[a];
  return out;
}

}  // namespace mailab
