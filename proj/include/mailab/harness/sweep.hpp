#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "mailab/harness/suites.hpp"

namespace mailab::harness {

/// Invalid sweep or command configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepConfig {
  std::uint64_t base_seed = 0;
  std::map<std::string, std::vector<double>> grid;
  std::string fixture = "fig1";
  std::string algo = "fixture";
  std::size_t jobs = 1;
  std::string out = "sweep_out";
  double tolerance = 1e-9;
  double slack = 1e-6;
};

inline const std::vector<std::string>& sweep_fixtures() {
  static const std::vector<std::string> v{"fig1", "coverage_lb", "alice_lb", "random"};
  return v;
}

inline const std::vector<std::string>& sweep_algos() {
  static const std::vector<std::string> v{"fixture", "jbc", "jbc-adversarial", "malice", "blades", "jirl"};
  return v;
}

inline const std::vector<std::string>& sweep_params() {
  static const std::vector<std::string> v{"H", "u", "beta", "eps", "N", "seed", "S", "A", "demos"};
  return v;
}

inline SweepConfig sweep_config_from_json(const Json& j) {
  auto contains = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  SweepConfig c;
  try {
    c.base_seed = j.value("base_seed", std::uint64_t{0});
    c.fixture = j.value("fixture", c.fixture);
    c.algo = j.value("algo", c.algo);
    c.jobs = j.value("jobs", std::size_t{1});
    c.out = j.value("out", c.out);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.slack = j.value("slack", c.slack);
    if (!j.contains("grid") || !j.at("grid").is_object()) throw ConfigError("sweep config needs a 'grid' object");
    for (const auto& [k, v] : j.at("grid").items()) c.grid[k] = v.get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("sweep config: ") + e.what());
  }
  if (c.grid.empty()) throw ConfigError("sweep grid is empty");
  for (const auto& [k, v] : c.grid) {
    if (!contains(sweep_params(), k)) throw ConfigError("unknown grid parameter '" + k + "'");
    if (v.empty()) throw ConfigError("grid parameter '" + k + "' has no values");
  }
  if (!contains(sweep_fixtures(), c.fixture)) throw ConfigError("unknown fixture '" + c.fixture + "'");
  if (!contains(sweep_algos(), c.algo)) throw ConfigError("unknown algorithm '" + c.algo + "'");
  if (c.jobs == 0) throw ConfigError("jobs must be positive");
  if (!(c.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  return c;
}

using Cell = std::map<std::string, double>;

/// Cartesian product of the grid in lexicographic parameter order, last parameter fastest.
inline std::vector<Cell> expand_grid(const std::map<std::string, std::vector<double>>& grid) {
  std::vector<Cell> cells{Cell{}};
  for (const auto& [name, values] : grid) {
    std::vector<Cell> next;
    next.reserve(cells.size() * values.size());
    for (const auto& c : cells) {
      for (double v : values) {
        auto d = c;
        d[name] = v;
        next.push_back(std::move(d));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

namespace detail {

inline double param(const Cell& cell, const char* name, double fallback) {
  const auto it = cell.find(name);
  return it == cell.end() ? fallback : it->second;
}

inline std::size_t count_param(const Cell& cell, const char* name, double fallback) {
  const double v = param(cell, name, fallback);
  if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError(std::string("parameter ") + name + " must be a whole number");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/**
 * One sweep cell. Named fixtures are scored against the complete deviation
 * class and trained against the swap class; random fixtures use the random
 * explicit class for both.
 */
inline ReportRow run_cell(const SweepConfig& config, const Cell& cell, std::size_t index) {
  detail::Stopwatch clock;
  const std::uint64_t seed =
      cell.count("seed") ? static_cast<std::uint64_t>(cell.at("seed")) : derive_seed(config.base_seed, index);
  const std::size_t H = detail::count_param(cell, "H", 8);
  const double u = detail::param(cell, "u", 4.0);
  const double beta = detail::param(cell, "beta", 0.1);
  const double eps = detail::param(cell, "eps", 0.001);
  const std::size_t N = detail::count_param(cell, "N", 500);
  const std::size_t n_demos = detail::count_param(cell, "demos", 50);

  Fixture f;
  std::optional<DeviationClass> train_phi;
  DeviationClass eval_phi;
  if (config.fixture == "fig1") {
    f = fig1_game(H);
  } else if (config.fixture == "coverage_lb") {
    f = coverage_lb_game(H, u, beta, eps);
  } else if (config.fixture == "alice_lb") {
    f = alice_lb_game(H, u, beta, eps);
  } else {
    RandomGameSpec spec;
    spec.num_states = detail::count_param(cell, "S", 4);
    spec.actions_per_agent = detail::count_param(cell, "A", 2);
    spec.horizon = H;
    spec.full_coverage_expert = true;
    f = random_mg(spec, seed);
    Rng rng(derive_seed(seed, 1));
    train_phi = random_deviation_class(f.game, rng, 3);
  }
  const auto& game = f.game;
  const auto& expert = f.expert;
  eval_phi = train_phi ? *train_phi : DeviationClass::complete(game.num_agents());
  if (!train_phi) train_phi = DeviationClass::swap_class(game);

  ReportRow r = detail::row("sweep", config.fixture, config.algo);
  r.H = double(game.horizon());
  r.m = double(game.num_agents());
  r.seed = double(seed);
  r.beta = coverage_constant(game, expert);
  r.u = recoverability_constant(game, expert, eval_phi);
  const double Hd = double(game.horizon());

  MediatorPolicy sigma;
  double bound = kUnset;
  if (config.algo == "fixture") {
    sigma = f.learner;
    if (f.params.count("eps")) r.eps = f.params.at("eps");
  } else if (config.algo == "jbc" || config.algo == "jbc-adversarial") {
    JBCOptions opts;
    if (config.algo == "jbc-adversarial") opts.fill = FillRule::adversarial;
    opts.adversary_class = eval_phi;
    sigma = j_bc(game, sample_demonstrations(game, expert, n_demos, derive_seed(seed, 2)), opts);
    r.eps = bc_loss(expert, sigma, occupancy_bundle(game, expert).d);
    r.N = double(n_demos);
    if (r.beta > 0.0) bound = r.eps / r.beta * r.u * Hd + 2.0 * r.eps * r.u * Hd;
  } else if (config.algo == "malice" || config.algo == "blades") {
    TrainConfig tc;
    tc.phi = *train_phi;
    tc.oco.rounds = N;
    tc.seed = seed;
    r.N = double(N);
    TrainResult res;
    if (config.algo == "malice") {
      res = malice_train(game, malice_data_exact(game, expert), MediatorPolicy::uniform(game), tc);
    } else {
      ExpertOracle oracle(expert);
      res = blades_train(game, oracle, sample_demonstrations(game, expert, n_demos, derive_seed(seed, 2)), tc);
    }
    sigma = res.policy;
    r.eps = res.self_consistent_loss;
    const double u_train = recoverability_constant(game, expert, *train_phi);
    if (eval_phi.all_explicit()) bound = 2.0 * r.eps * u_train * Hd;
  } else {
    JIRLConfig jc;
    jc.rounds = N;
    r.N = double(N);
    const auto res = j_irl(game, occupancy_bundle(game, expert), jc);
    sigma = res.policy;
    r.eps = res.moment_error;
  }

  r.value_gap = value_gap(game, expert, sigma);
  r.regret_gap = regret_gap(game, expert, sigma, eval_phi);
  r.measured = r.regret_gap;
  if (config.algo == "fixture" && f.expected.count("regret_gap")) {
    r.expected = f.expected.at("regret_gap");
    r.pass = std::abs(r.measured - r.expected) <= config.tolerance;
  } else if (config.algo == "jirl") {
    r.bound = r.eps * Hd;
    r.measured = r.value_gap;
    r.pass = r.measured <= r.bound + config.tolerance;
  } else if (!std::isnan(bound)) {
    r.bound = bound;
    r.pass = r.measured <= bound + config.slack;
  } else {
    r.pass = true;
  }
  r.runtime_ms = clock.ms();
  return r;
}

struct SweepResult {
  std::vector<Cell> cells;
  std::vector<ReportRow> rows;
  std::vector<std::string> errors;  // per cell, empty when the cell ran

  [[nodiscard]] bool passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
  }
};

/// Runs every cell, `jobs` at a time; rows are collected by cell index after the join.
inline SweepResult run_sweep(const SweepConfig& config) {
  if (config.grid.empty()) throw ConfigError("sweep grid is empty");
  SweepResult out;
  out.cells = expand_grid(config.grid);
  out.rows.resize(out.cells.size());
  out.errors.resize(out.cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < out.cells.size(); k = next.fetch_add(1)) {
      try {
        out.rows[k] = run_cell(config, out.cells[k], k);
      } catch (const std::exception& e) {
        out.rows[k] = detail::row("sweep", config.fixture, config.algo);
        out.rows[k].pass = false;
        out.errors[k] = e.what();
      }
    }
  };
  const std::size_t jobs = std::min(config.jobs, out.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

/// Least-squares slope of regret_gap against the single varying grid parameter, if there is one.
inline std::optional<std::pair<std::string, double>> sweep_slope(const SweepResult& result) {
  if (result.cells.empty()) return std::nullopt;
  std::optional<std::string> varying;
  for (const auto& [name, v] : result.cells.front()) {
    for (const auto& c : result.cells) {
      if (c.at(name) != v) {
        if (varying && *varying != name) return std::nullopt;
        varying = name;
        break;
      }
    }
  }
  if (!varying) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    if (!result.errors[k].empty()) continue;
    const double x = result.cells[k].at(*varying);
    const double y = result.rows[k].regret_gap;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || den == 0.0) return std::nullopt;
  return std::make_pair(*varying, (n * sxy - sx * sy) / den);
}

inline Json sweep_summary(const SweepConfig& config, const SweepResult& result) {
  std::size_t failed = 0;
  Json errors = Json::array();
  for (std::size_t k = 0; k < result.rows.size(); ++k) {
    if (!result.rows[k].pass) ++failed;
    if (!result.errors[k].empty()) errors.push_back({{"cell", k}, {"error", result.errors[k]}});
  }
  Json grid = Json::object();
  for (const auto& [k, v] : config.grid) grid[k] = v;
  Json out{{"fixture", config.fixture},
           {"algo", config.algo},
           {"base_seed", config.base_seed},
           {"grid", std::move(grid)},
           {"cells", result.rows.size()},
           {"passed", result.rows.size() - failed},
           {"failed", failed},
           {"errors", std::move(errors)}};
  if (const auto slope = sweep_slope(result)) out["regret_gap_slope"] = {{"param", slope->first}, {"slope", slope->second}};
  return out;
}

}  // namespace mailab::harness
