#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mailab {

/// Absolute tolerance used for every "is a probability vector" check.
inline constexpr double kProbabilityTolerance = 1e-12;

/**
 * Row-major flattening of the joint action space A_1 x ... x A_m.
 *
 * Agent 0 is the most significant digit, so for two binary agents the joint
 * indices enumerate (a1,a1), (a1,a2), (a2,a1), (a2,a2). This ordering is part
 * of the on-disk file format.
 */
class JointActionSpace {
 public:
  JointActionSpace() = default;

  explicit JointActionSpace(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    strides_.assign(sizes_.size(), 1);
    size_ = 1;
    for (std::size_t k = sizes_.size(); k-- > 0;) {
      if (sizes_[k] == 0) throw std::invalid_argument("agent action set must be nonempty");
      strides_[k] = size_;
      size_ *= sizes_[k];
    }
  }

  [[nodiscard]] std::size_t num_agents() const noexcept { return sizes_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] std::size_t agent_size(std::size_t agent) const { return sizes_.at(agent); }
  [[nodiscard]] const std::vector<std::size_t>& agent_sizes() const noexcept { return sizes_; }

  /// Own action a_i of `agent` inside joint action `joint`.
  [[nodiscard]] std::size_t own(std::size_t joint, std::size_t agent) const {
    return (joint / strides_[agent]) % sizes_[agent];
  }

  /// Joint action with agent's component replaced by `action`.
  [[nodiscard]] std::size_t with_own(std::size_t joint, std::size_t agent, std::size_t action) const {
    return joint - own(joint, agent) * strides_[agent] + action * strides_[agent];
  }

  [[nodiscard]] std::size_t encode(std::span<const std::size_t> actions) const {
    if (actions.size() != sizes_.size()) throw std::invalid_argument("joint action arity mismatch");
    std::size_t joint = 0;
    for (std::size_t k = 0; k < actions.size(); ++k) {
      if (actions[k] >= sizes_[k]) throw std::out_of_range("own action out of range");
      joint += actions[k] * strides_[k];
    }
    return joint;
  }

  [[nodiscard]] std::vector<std::size_t> decode(std::size_t joint) const {
    std::vector<std::size_t> out(sizes_.size());
    for (std::size_t k = 0; k < sizes_.size(); ++k) out[k] = own(joint, k);
    return out;
  }

  bool operator==(const JointActionSpace&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/**
 * Finite-horizon Markov Game with m agents.
 *
 * Tensor layout: transitions are [s][joint][s'], rewards are [agent][s][joint].
 * The constructor enforces the shape contract; numeric invariants (row sums,
 * reward range) are reported by validate_game so malformed inputs can be
 * inspected rather than rejected.
 */
class MarkovGame {
 public:
  MarkovGame() = default;

  MarkovGame(std::size_t horizon, std::vector<std::string> states,
             std::vector<std::vector<std::string>> actions, std::vector<double> initial_dist,
             std::vector<double> transitions, std::vector<double> rewards)
      : horizon_(horizon),
        states_(std::move(states)),
        actions_(std::move(actions)),
        initial_dist_(std::move(initial_dist)),
        transitions_(std::move(transitions)),
        rewards_(std::move(rewards)) {
    if (horizon_ == 0) throw std::invalid_argument("horizon must be positive");
    if (states_.empty()) throw std::invalid_argument("game needs at least one state");
    if (actions_.empty()) throw std::invalid_argument("game needs at least one agent");
    std::vector<std::size_t> sizes;
    sizes.reserve(actions_.size());
    for (const auto& a : actions_) sizes.push_back(a.size());
    joint_ = JointActionSpace(std::move(sizes));

    const std::size_t S = states_.size();
    const std::size_t A = joint_.size();
    auto expect = [](const char* what, std::size_t got, std::size_t want) {
      if (got != want) {
        std::ostringstream msg;
        msg << what << " has " << got << " entries, expected " << want;
        throw std::invalid_argument(msg.str());
      }
    };
    expect("initial_dist", initial_dist_.size(), S);
    expect("transitions", transitions_.size(), S * A * S);
    expect("rewards", rewards_.size(), actions_.size() * S * A);
  }

  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t num_agents() const noexcept { return actions_.size(); }
  [[nodiscard]] std::size_t num_states() const noexcept { return states_.size(); }
  [[nodiscard]] std::size_t num_joint_actions() const noexcept { return joint_.size(); }
  [[nodiscard]] std::size_t num_actions(std::size_t agent) const { return joint_.agent_size(agent); }
  [[nodiscard]] const JointActionSpace& joint_space() const noexcept { return joint_; }

  [[nodiscard]] const std::vector<std::string>& state_names() const noexcept { return states_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& action_names() const noexcept {
    return actions_;
  }
  [[nodiscard]] std::span<const double> initial_dist() const noexcept { return initial_dist_; }
  [[nodiscard]] std::span<const double> transition_tensor() const noexcept { return transitions_; }
  [[nodiscard]] std::span<const double> reward_tensor() const noexcept { return rewards_; }

  /// T(. | s, joint) as a span over next states.
  [[nodiscard]] std::span<const double> next_state_dist(std::size_t s, std::size_t joint) const {
    const std::size_t S = num_states();
    return {transitions_.data() + (s * num_joint_actions() + joint) * S, S};
  }

  [[nodiscard]] double transition(std::size_t s, std::size_t joint, std::size_t next) const {
    return next_state_dist(s, joint)[next];
  }

  /// r_i[s][joint] for one agent, flattened as s * |A| + joint.
  [[nodiscard]] std::span<const double> reward_table(std::size_t agent) const {
    const std::size_t block = num_states() * num_joint_actions();
    return {rewards_.data() + agent * block, block};
  }

  [[nodiscard]] double reward(std::size_t agent, std::size_t s, std::size_t joint) const {
    return reward_table(agent)[s * num_joint_actions() + joint];
  }

  /// Copy of this game with every agent's reward replaced by `common` ([s][joint]).
  [[nodiscard]] MarkovGame with_common_reward(std::span<const double> common) const {
    const std::size_t block = num_states() * num_joint_actions();
    if (common.size() != block) throw std::invalid_argument("common reward has wrong shape");
    std::vector<double> r;
    r.reserve(block * num_agents());
    for (std::size_t i = 0; i < num_agents(); ++i) r.insert(r.end(), common.begin(), common.end());
    return MarkovGame(horizon_, states_, actions_, initial_dist_, transitions_, std::move(r));
  }

  [[nodiscard]] MarkovGame with_rewards(std::vector<double> rewards) const {
    return MarkovGame(horizon_, states_, actions_, initial_dist_, transitions_, std::move(rewards));
  }

 private:
  std::size_t horizon_ = 1;
  std::vector<std::string> states_;
  std::vector<std::vector<std::string>> actions_;
  std::vector<double> initial_dist_;
  std::vector<double> transitions_;
  std::vector<double> rewards_;
  JointActionSpace joint_;
};

struct ValidationOptions {
  /// Rewards must lie in [-reward_bound, reward_bound].
  double reward_bound = 1.0;
};

struct ValidationReport {
  std::vector<std::string> violations;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

namespace detail {

/// Empty string when `p` is a probability vector, otherwise a reason.
inline std::string check_distribution(std::span<const double> p, double tol = kProbabilityTolerance) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x)) return "non-finite entry";
    if (x < 0.0) return "negative entry";
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "row sum " << sum;
    return msg.str();
  }
  return {};
}

}  // namespace detail

/// Checks every numeric invariant of the game and lists each violation.
inline ValidationReport validate_game(const MarkovGame& game, ValidationOptions options = {}) {
  ValidationReport report;
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();

  if (auto why = detail::check_distribution(game.initial_dist()); !why.empty()) {
    report.violations.push_back("initial_dist: " + why);
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      if (auto why = detail::check_distribution(game.next_state_dist(s, a)); !why.empty()) {
        std::ostringstream msg;
        msg << "transition[" << s << "][" << a << "]: " << why;
        report.violations.push_back(msg.str());
      }
    }
  }
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    const auto r = game.reward_table(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (!(r[k] >= -options.reward_bound && r[k] <= options.reward_bound)) {
        std::ostringstream msg;
        msg << "reward[" << i << "][" << k / A << "][" << k % A << "] = " << r[k]
            << " outside [-" << options.reward_bound << ", " << options.reward_bound << "]";
        report.violations.push_back(msg.str());
      }
    }
  }
  std::size_t product = 1;
  for (std::size_t i = 0; i < game.num_agents(); ++i) product *= game.num_actions(i);
  if (product != A) report.violations.push_back("joint action space size mismatch");
  return report;
}

}  // namespace mailab
