#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mailab/fixtures.hpp"
#include "mailab/oco.hpp"
#include "mailab/oracle.hpp"
#include "mailab/regret.hpp"

namespace mailab {

using Json = nlohmann::json;

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setw(2) << j << '\n';
}

namespace detail {

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

inline Json rows(std::span<const double> flat, std::size_t width) {
  Json out = Json::array();
  for (std::size_t k = 0; k < flat.size(); k += width) {
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(k),
                                      flat.begin() + static_cast<std::ptrdiff_t>(k + width)));
  }
  return out;
}

/// Null for non-finite numbers so reports stay valid JSON.
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace detail

// ---------------------------------------------------------------- game

inline Json to_json(const MarkovGame& game) {
  const std::size_t S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  Json T = Json::array();
  for (std::size_t s = 0; s < S; ++s) {
    T.push_back(detail::rows(game.transition_tensor().subspan(s * A * S, A * S), S));
  }
  Json r = Json::array();
  for (std::size_t i = 0; i < game.num_agents(); ++i) r.push_back(detail::rows(game.reward_table(i), A));
  return {{"horizon", game.horizon()},
          {"states", game.state_names()},
          {"actions", game.action_names()},
          {"initial_dist", std::vector<double>(game.initial_dist().begin(), game.initial_dist().end())},
          {"transitions", std::move(T)},
          {"rewards", std::move(r)}};
}

inline MarkovGame game_from_json(const Json& j) {
  const auto horizon = detail::field<std::size_t>(j, "horizon");
  auto states = detail::field<std::vector<std::string>>(j, "states");
  auto actions = detail::field<std::vector<std::vector<std::string>>>(j, "actions");
  auto rho0 = detail::field<std::vector<double>>(j, "initial_dist");
  const auto T3 = detail::field<std::vector<std::vector<std::vector<double>>>>(j, "transitions");
  const auto R3 = detail::field<std::vector<std::vector<std::vector<double>>>>(j, "rewards");
  std::vector<double> T;
  for (const auto& s : T3) {
    for (const auto& a : s) T.insert(T.end(), a.begin(), a.end());
  }
  std::vector<double> R;
  for (const auto& i : R3) {
    for (const auto& s : i) R.insert(R.end(), s.begin(), s.end());
  }
  try {
    return MarkovGame(horizon, std::move(states), std::move(actions), std::move(rho0), std::move(T), std::move(R));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("game: ") + e.what());
  }
}

// ---------------------------------------------------------------- policy

inline Json to_json(const MediatorPolicy& policy) {
  return {{"num_states", policy.num_states()},
          {"num_joint", policy.num_joint()},
          {"table", detail::rows(policy.table(), policy.num_joint())}};
}

inline MediatorPolicy policy_from_json(const Json& j) {
  const auto table = detail::field<std::vector<std::vector<double>>>(j, "table");
  if (table.empty() || table.front().empty()) throw FormatError("policy table is empty");
  std::vector<double> flat;
  for (const auto& row : table) {
    if (row.size() != table.front().size()) throw FormatError("policy rows differ in length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return MediatorPolicy(table.size(), table.front().size(), std::move(flat));
}

// ---------------------------------------------------------------- deviations

/**
 * {"agent": i, "entries": [[s, a, b], ...]} lists only the redirected pairs;
 * time-indexed maps add "steps": H and use [h, s, a, b] entries.
 */
inline Json to_json(const Deviation& phi) {
  Json entries = Json::array();
  const std::size_t n = phi.num_own_actions();
  for (std::size_t h = 0; h < phi.num_layers(); ++h) {
    const auto& layer = phi.maps()[h];
    for (std::size_t k = 0; k < layer.size(); ++k) {
      if (layer[k] == k % n) continue;
      if (phi.is_time_indexed()) {
        entries.push_back({h, k / n, k % n, layer[k]});
      } else {
        entries.push_back({k / n, k % n, layer[k]});
      }
    }
  }
  Json out{{"agent", phi.agent()}, {"entries", std::move(entries)}};
  if (phi.is_time_indexed()) out["steps"] = phi.num_layers();
  return out;
}

inline Deviation deviation_from_json(const Json& j, const MarkovGame& game) {
  const auto agent = detail::field<std::size_t>(j, "agent");
  if (agent >= game.num_agents()) throw FormatError("deviation agent out of range");
  const std::size_t S = game.num_states();
  const std::size_t n = game.num_actions(agent);
  const auto entries = detail::field<std::vector<std::vector<std::size_t>>>(j, "entries");
  const bool timed = j.contains("steps");
  auto phi = timed ? Deviation::time_indexed(agent, S, n,
                                             std::vector<std::vector<std::size_t>>(
                                                 detail::field<std::size_t>(j, "steps"),
                                                 Deviation::identity(agent, S, n).maps().front()))
                   : Deviation::identity(agent, S, n);
  for (const auto& e : entries) {
    if (e.size() != (timed ? 4u : 3u)) throw FormatError("deviation entry has the wrong arity");
    const std::size_t h = timed ? e[0] : 0;
    if (timed && h >= phi.num_layers()) throw FormatError("deviation step out of range");
    try {
      phi.set(h, e[e.size() - 3], e[e.size() - 2], e[e.size() - 1]);
    } catch (const std::out_of_range& ex) {
      throw FormatError(std::string("deviation entry: ") + ex.what());
    }
  }
  return phi;
}

/**
 * {"deviations": [...], "complete": [agents]}. Agents without listed
 * deviations get the identity alone; the identity is added where missing.
 */
inline DeviationClass deviation_class_from_json(const Json& j, const MarkovGame& game) {
  const std::size_t m = game.num_agents();
  std::vector<std::vector<Deviation>> lists(m);
  std::vector<bool> complete(m, false);
  if (j.contains("complete")) {
    for (auto i : detail::field<std::vector<std::size_t>>(j, "complete")) {
      if (i >= m) throw FormatError("complete agent out of range");
      complete[i] = true;
    }
  }
  if (j.contains("deviations")) {
    if (!j.at("deviations").is_array()) throw FormatError("'deviations' must be an array");
    for (const auto& d : j.at("deviations")) {
      auto phi = deviation_from_json(d, game);
      lists[phi.agent()].push_back(std::move(phi));
    }
  }
  std::vector<AgentDeviations> per;
  for (std::size_t i = 0; i < m; ++i) {
    if (complete[i]) {
      per.emplace_back(CompleteDeviations{});
      continue;
    }
    bool has_identity = false;
    for (const auto& phi : lists[i]) has_identity = has_identity || phi.is_identity();
    if (!has_identity) lists[i].insert(lists[i].begin(), Deviation::identity(game, i));
    per.emplace_back(std::move(lists[i]));
  }
  return DeviationClass(std::move(per));
}

inline Json to_json(const DeviationClass& phi) {
  Json devs = Json::array();
  Json complete = Json::array();
  for (std::size_t i = 0; i < phi.num_agents(); ++i) {
    if (phi.is_complete(i)) {
      complete.push_back(i);
      continue;
    }
    for (const auto& d : phi.deviations(i)) devs.push_back(to_json(d));
  }
  return {{"deviations", std::move(devs)}, {"complete", std::move(complete)}};
}

inline Json witnesses_to_json(const std::vector<Deviation>& witnesses) {
  Json devs = Json::array();
  for (const auto& d : witnesses) devs.push_back(to_json(d));
  return {{"deviations", std::move(devs)}};
}

// ---------------------------------------------------------------- demonstrations

inline Json to_json(const DemonstrationSet& demos) {
  Json trajs = Json::array();
  for (const auto& t : demos.trajectories) {
    Json steps = Json::array();
    for (const auto& st : t.steps) steps.push_back({st.state, st.joint});
    trajs.push_back(std::move(steps));
  }
  return {{"seed", demos.seed}, {"trajectories", std::move(trajs)}};
}

inline DemonstrationSet demos_from_json(const Json& j) {
  DemonstrationSet out;
  out.seed = detail::field<std::uint64_t>(j, "seed");
  for (const auto& t : detail::field<std::vector<std::vector<std::vector<std::size_t>>>>(j, "trajectories")) {
    Trajectory traj;
    for (const auto& st : t) {
      if (st.size() != 2) throw FormatError("trajectory step must be [state, joint]");
      traj.steps.push_back({st[0], st[1]});
    }
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

// ---------------------------------------------------------------- fixtures

inline Json expected_to_json(const Fixture& f) {
  Json params = Json::object();
  for (const auto& [k, v] : f.params) params[k] = detail::number(v);
  Json expected = Json::object();
  for (const auto& [k, v] : f.expected) expected[k] = detail::number(v);
  return {{"fixture", f.name},
          {"params", std::move(params)},
          {"flags", f.flags},
          {"reward_bound", f.reward_bound},
          {"expected", std::move(expected)}};
}

// ---------------------------------------------------------------- evaluation report

struct EvalReport {
  std::vector<double> values;         // J_i(pi_sigma)
  std::vector<double> expert_values;  // J_i(pi_sigmaE)
  RegretReport regret;
  double expert_regret = 0.0;
  double value_gap = 0.0;
  double regret_gap = 0.0;
  double beta = 0.0;
  double u = 0.0;
  std::vector<ValueTables> tables;  // per agent, learner side
};

inline EvalReport evaluate(const MarkovGame& game, const MediatorPolicy& expert, const MediatorPolicy& sigma,
                           const DeviationClass& phi) {
  EvalReport out;
  out.values = values(game, sigma);
  out.expert_values = values(game, expert);
  out.regret = regret_report(game, sigma, phi);
  out.expert_regret = regret(game, expert, phi);
  out.value_gap = value_gap(game, expert, sigma);
  out.regret_gap = out.regret.regret - out.expert_regret;
  out.beta = coverage_constant(game, expert);
  out.u = recoverability_constant(game, expert, phi);
  for (std::size_t i = 0; i < game.num_agents(); ++i) out.tables.push_back(advantage_tensor(game, sigma, i));
  return out;
}

inline Json to_json(const EvalReport& r, const MarkovGame& game) {
  const std::size_t A = game.num_joint_actions();
  Json gains = Json::array();
  for (const auto& g : r.regret.gains) {
    gains.push_back({{"agent", g.agent},
                     {"deviation", g.index == kNoIndex ? Json("best-response") : Json(g.index)},
                     {"gain", g.gain}});
  }
  Json tensors = Json::array();
  for (const auto& t : r.tables) {
    Json q = Json::array(), adv = Json::array();
    for (const auto& layer : t.q) q.push_back(detail::rows(layer, A));
    for (const auto& layer : t.adv) adv.push_back(detail::rows(layer, A));
    tensors.push_back({{"V", t.v}, {"Q", std::move(q)}, {"A", std::move(adv)}});
  }
  return {{"values", r.values},
          {"expert_values", r.expert_values},
          {"regret", r.regret.regret},
          {"regret_agent", r.regret.agent},
          {"regret_exact", r.regret.exact},
          {"expert_regret", r.expert_regret},
          {"value_gap", r.value_gap},
          {"regret_gap", r.regret_gap},
          {"beta", r.beta},
          {"u", r.u},
          {"per_deviation_gains", std::move(gains)},
          {"witness", to_json(r.regret.witness)},
          {"tensors", std::move(tensors)}};
}

// ---------------------------------------------------------------- CSV

inline constexpr int kSchemaVersion = 1;
inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct ReportRow {
  std::string suite;
  std::string fixture;
  std::string algo;
  double H = kUnset;
  double m = kUnset;
  double beta = kUnset;
  double u = kUnset;
  double eps = kUnset;
  double N = kUnset;
  double seed = kUnset;
  double value_gap = kUnset;
  double regret_gap = kUnset;
  double bound = kUnset;
  double expected = kUnset;
  double measured = kUnset;
  bool pass = false;
  double runtime_ms = 0.0;
};

inline const char* report_header() {
  return "schema_version,suite,fixture,algo,H,m,beta,u,eps,N,seed,value_gap,regret_gap,bound,expected,measured,pass,"
         "runtime_ms";
}

namespace detail {

inline std::string cell(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace detail

inline std::string to_csv(const ReportRow& r) {
  using detail::cell;
  std::ostringstream os;
  os << kSchemaVersion << ',' << r.suite << ',' << r.fixture << ',' << r.algo << ',' << cell(r.H) << ',' << cell(r.m)
     << ',' << cell(r.beta) << ',' << cell(r.u) << ',' << cell(r.eps) << ',' << cell(r.N) << ',' << cell(r.seed)
     << ',' << cell(r.value_gap) << ',' << cell(r.regret_gap) << ',' << cell(r.bound) << ',' << cell(r.expected)
     << ',' << cell(r.measured) << ',' << (r.pass ? "true" : "false") << ',' << cell(r.runtime_ms);
  return os.str();
}

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << report_header() << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "round,loss,achieving_agent,achieving_deviation,step_size\n";
  out << std::setprecision(17);
  for (const auto& t : trace) {
    out << t.round << ',' << t.loss << ',' << t.achieving.agent << ',' << t.achieving.index << ',' << t.step_size
        << '\n';
  }
}

/// One JSON object per line: {"round", "state", "mode"}.
inline void write_oracle_log(std::ostream& out, const std::vector<QueryRecord>& log) {
  for (const auto& q : log) {
    out << Json{{"round", q.round}, {"state", q.state}, {"mode", to_string(q.mode)}}.dump() << '\n';
  }
}

}  // namespace mailab
