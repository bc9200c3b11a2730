#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mailab/eval.hpp"
#include "mailab/regret.hpp"

namespace mailab {

/// Raised when an importance ratio would divide by zero expert density.
class CoverageViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-state table over joint actions, same layout as MediatorPolicy::table().
using PolicyGradient = std::vector<double>;

/// sum_s w(s) TV(target(s), sigma(s)).
class WeightedTVLoss {
 public:
  WeightedTVLoss(std::vector<double> weights, MediatorPolicy target)
      : weights_(std::move(weights)), target_(std::move(target)) {
    if (weights_.size() != target_.num_states()) throw std::invalid_argument("one weight per state");
    require_distribution(weights_, "loss weights");
  }

  [[nodiscard]] double evaluate(const MediatorPolicy& sigma) const {
    return weighted_tv_loss(target_, sigma, weights_);
  }

  /// w(s)/2 sign(sigma - target), sign(0) = 0; accumulated into `out`.
  void accumulate_subgradient(const MediatorPolicy& sigma, PolicyGradient& out) const {
    const std::size_t A = target_.num_joint();
    for (std::size_t s = 0; s < weights_.size(); ++s) {
      if (weights_[s] == 0.0) continue;
      const auto p = sigma.row(s);
      const auto q = target_.row(s);
      for (std::size_t a = 0; a < A; ++a) {
        const double diff = p[a] - q[a];
        if (diff > 0.0) {
          out[s * A + a] += 0.5 * weights_[s];
        } else if (diff < 0.0) {
          out[s * A + a] -= 0.5 * weights_[s];
        }
      }
    }
  }

  [[nodiscard]] PolicyGradient subgradient(const MediatorPolicy& sigma) const {
    PolicyGradient g(sigma.table().size(), 0.0);
    accumulate_subgradient(sigma, g);
    return g;
  }

  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] const MediatorPolicy& target() const noexcept { return target_; }

 private:
  std::vector<double> weights_;
  MediatorPolicy target_;
};

/// Which (agent, deviation) a composite component came from.
struct DeviationLabel {
  std::size_t agent = 0;
  std::size_t index = 0;
  bool operator==(const DeviationLabel&) const = default;
};

struct LossValue {
  double value = 0.0;
  std::size_t component = 0;
};

/// max over components; the first maximal component is the achieving one.
class CompositeMaxLoss {
 public:
  CompositeMaxLoss() = default;
  CompositeMaxLoss(std::vector<WeightedTVLoss> components, std::vector<DeviationLabel> labels)
      : components_(std::move(components)), labels_(std::move(labels)) {
    if (components_.empty()) throw std::invalid_argument("composite loss needs a component");
    if (components_.size() != labels_.size()) throw std::invalid_argument("one label per component");
  }

  static CompositeMaxLoss single(WeightedTVLoss loss) {
    return CompositeMaxLoss({std::move(loss)}, {DeviationLabel{}});
  }

  [[nodiscard]] LossValue evaluate(const MediatorPolicy& sigma) const {
    LossValue best{components_.front().evaluate(sigma), 0};
    for (std::size_t k = 1; k < components_.size(); ++k) {
      const double v = components_[k].evaluate(sigma);
      if (v > best.value) best = {v, k};
    }
    return best;
  }

  [[nodiscard]] double operator()(const MediatorPolicy& sigma) const { return evaluate(sigma).value; }

  [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
  [[nodiscard]] const WeightedTVLoss& component(std::size_t k) const { return components_.at(k); }
  [[nodiscard]] const DeviationLabel& label(std::size_t k) const { return labels_.at(k); }

 private:
  std::vector<WeightedTVLoss> components_;
  std::vector<DeviationLabel> labels_;
};

/// Subgradient of the achieving component at sigma.
inline PolicyGradient subgradient(const CompositeMaxLoss& loss, const MediatorPolicy& sigma) {
  return loss.component(loss.evaluate(sigma).component).subgradient(sigma);
}

inline double bc_loss(const MediatorPolicy& expert, const MediatorPolicy& sigma, std::span<const double> d_expert) {
  return weighted_tv_loss(expert, sigma, d_expert);
}

/// Averaged state distribution of pi_{sigma,phi} for one labelled deviation.
struct DeviatedDistribution {
  DeviationLabel label;
  std::vector<double> d;
};

/// Exact d^{pi_{sigma,phi_i}} for every deviation of an explicit class.
inline std::vector<DeviatedDistribution> deviated_state_distributions(const MarkovGame& game,
                                                                      const MediatorPolicy& sigma,
                                                                      const DeviationClass& phi) {
  if (!phi.all_explicit()) throw std::invalid_argument("training requires an explicit deviation class");
  std::vector<DeviatedDistribution> out;
  out.reserve(phi.explicit_size());
  for (std::size_t i = 0; i < phi.num_agents(); ++i) {
    const auto& list = phi.deviations(i);
    for (std::size_t k = 0; k < list.size(); ++k) {
      out.push_back({{i, k}, occupancy_bundle(game, induced_schedule(game, sigma, list[k])).d});
    }
  }
  return out;
}

/**
 * MALICE loss: components E_{s~d_E}[(d_dev(s) / d_E(s)) TV(target(s), .)].
 * The importance ratio is formed explicitly and fails on missing support.
 */
inline CompositeMaxLoss build_malice_loss(const MediatorPolicy& target, std::span<const double> d_expert,
                                          const std::vector<DeviatedDistribution>& deviated) {
  if (deviated.empty()) throw std::invalid_argument("no deviated distributions");
  std::vector<WeightedTVLoss> comps;
  std::vector<DeviationLabel> labels;
  comps.reserve(deviated.size());
  for (const auto& dev : deviated) {
    if (dev.d.size() != d_expert.size()) throw std::invalid_argument("distribution length mismatch");
    std::vector<double> w(d_expert.size(), 0.0);
    for (std::size_t s = 0; s < w.size(); ++s) {
      if (dev.d[s] == 0.0) continue;
      if (!(d_expert[s] > 0.0)) {
        throw CoverageViolation("deviated distribution visits state " + std::to_string(s) +
                                " which the expert never visits");
      }
      const double ratio = dev.d[s] / d_expert[s];
      w[s] = d_expert[s] * ratio;
    }
    comps.emplace_back(std::move(w), target);
    labels.push_back(dev.label);
  }
  return {std::move(comps), std::move(labels)};
}

inline double malice_loss(const MediatorPolicy& expert, const MediatorPolicy& sigma, std::span<const double> d_expert,
                          const std::vector<DeviatedDistribution>& deviated) {
  return build_malice_loss(expert, d_expert, deviated)(sigma);
}

/// BLADES loss: components E_{s~d_dev}[TV(target(s), .)], targets from expert queries.
inline CompositeMaxLoss build_blades_loss(const MediatorPolicy& target,
                                          const std::vector<DeviatedDistribution>& deviated) {
  if (deviated.empty()) throw std::invalid_argument("no deviated distributions");
  std::vector<WeightedTVLoss> comps;
  std::vector<DeviationLabel> labels;
  for (const auto& dev : deviated) {
    comps.emplace_back(dev.d, target);
    labels.push_back(dev.label);
  }
  return {std::move(comps), std::move(labels)};
}

}  // namespace mailab
