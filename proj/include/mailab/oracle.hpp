#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "mailab/losses.hpp"
#include "mailab/sampling.hpp"

namespace mailab {

enum class OracleMode { full_row, sampled_action };

inline const char* to_string(OracleMode mode) {
  return mode == OracleMode::full_row ? "full-row" : "sampled-action";
}

struct QueryRecord {
  std::size_t round = 0;
  std::size_t state = 0;
  OracleMode mode = OracleMode::full_row;
};

/**
 * Queryable expert. Repeated queries for the same (round, state) are served
 * from a cache, so the counter equals the number of distinct pairs asked.
 * Sampled-action answers are seeded by (seed, round, state) and therefore do
 * not depend on query order.
 */
class ExpertOracle {
 public:
  explicit ExpertOracle(MediatorPolicy expert, OracleMode mode = OracleMode::full_row, std::uint64_t seed = 0)
      : expert_(std::move(expert)), mode_(mode), seed_(seed) {}

  ExpertOracle(const ExpertOracle&) = delete;
  ExpertOracle& operator=(const ExpertOracle&) = delete;

  [[nodiscard]] std::size_t num_states() const noexcept { return expert_.num_states(); }
  [[nodiscard]] std::size_t num_joint() const noexcept { return expert_.num_joint(); }
  [[nodiscard]] OracleMode mode() const noexcept { return mode_; }

  void set_round(std::size_t round) { round_.store(round); }
  [[nodiscard]] std::size_t round() const { return round_.load(); }

  std::vector<double> query(std::size_t round, std::size_t s) {
    if (s >= expert_.num_states()) throw std::out_of_range("oracle query for unknown state");
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(round, s);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::vector<double> answer(expert_.row(s).begin(), expert_.row(s).end());
    if (mode_ == OracleMode::sampled_action) {
      Rng rng(derive_seed(seed_, round * expert_.num_states() + s));
      const std::size_t a = rng.categorical(answer);
      std::fill(answer.begin(), answer.end(), 0.0);
      answer[a] = 1.0;
    }
    count_.fetch_add(1);
    log_.push_back({round, s, mode_});
    cache_.emplace(key, answer);
    return answer;
  }

  [[nodiscard]] std::size_t query_count() const { return count_.load(); }

  [[nodiscard]] std::vector<QueryRecord> log() const {
    std::lock_guard lock(mutex_);
    return log_;
  }

 private:
  MediatorPolicy expert_;
  OracleMode mode_;
  std::uint64_t seed_;
  std::atomic<std::size_t> round_{0};
  std::atomic<std::size_t> count_{0};
  mutable std::mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache_;
  std::vector<QueryRecord> log_;
};

/// Query at the oracle's current round.
inline std::vector<double> expert_query(ExpertOracle& oracle, std::size_t s) {
  return oracle.query(oracle.round(), s);
}

/**
 * Target table built from oracle answers on every state some deviated
 * distribution visits; unvisited rows carry zero weight and stay uniform.
 */
inline MediatorPolicy query_targets(ExpertOracle& oracle, const std::vector<DeviatedDistribution>& deviated) {
  const std::size_t S = oracle.num_states();
  const std::size_t A = oracle.num_joint();
  MediatorPolicy target(S, A, std::vector<double>(S * A, 1.0 / double(A)));
  for (std::size_t s = 0; s < S; ++s) {
    bool visited = false;
    for (const auto& dev : deviated) visited = visited || dev.d[s] > 0.0;
    if (visited) target.set_row(s, expert_query(oracle, s));
  }
  return target;
}

/// l_BLADES(sigma_hat, sigma) with targets obtained only through the oracle.
inline double blades_loss(ExpertOracle& oracle, const MediatorPolicy& sigma,
                          const std::vector<DeviatedDistribution>& deviated) {
  return build_blades_loss(query_targets(oracle, deviated), deviated)(sigma);
}

}  // namespace mailab
