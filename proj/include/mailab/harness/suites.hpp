#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mailab/algorithms.hpp"
#include "mailab/fixtures.hpp"
#include "mailab/io.hpp"

namespace mailab::harness {

struct Tolerances {
  double equality = 1e-9;     // closed-form equalities
  double bound_slack = 1e-6;  // added to bound inequalities
  double occupancy = 1e-12;   // occupancy table equality
  double single_agent = 1e-8;
  double best_response = 1e-10;
  double nfg = 1e-12;
  double lemma = 1e-9;
  double ce = 1e-9;
  double jirl_moment = 0.05;
  double runtime_ms = 1000.0;  // per-H budget for fig1 checks
};

struct SuiteResult {
  std::string name;
  std::vector<ReportRow> rows;
  std::string summary;

  [[nodiscard]] bool passed() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
  }
  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.pass; }));
  }
};

namespace detail {

class Stopwatch {
 public:
  [[nodiscard]] double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

inline ReportRow row(const std::string& suite, const std::string& fixture, const std::string& algo) {
  ReportRow r;
  r.suite = suite;
  r.fixture = fixture;
  r.algo = algo;
  return r;
}

inline ReportRow equality_row(ReportRow r, double expected, double measured, double tol) {
  r.expected = expected;
  r.measured = measured;
  r.pass = std::abs(measured - expected) <= tol;
  return r;
}

inline ReportRow bound_row(ReportRow r, double bound, double measured, double slack) {
  r.bound = bound;
  r.measured = measured;
  r.pass = measured <= bound + slack;
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------- fixture suites

inline SuiteResult suite_thm3(const Tolerances& tol) {
  SuiteResult out{"thm3", {}, {}};
  const auto complete = DeviationClass::complete(2);
  for (std::size_t H : {4, 8, 16, 32}) {
    detail::Stopwatch clock;
    const auto f = fig1_game(H);
    const double l1 = moment_matching_error(f.game, f.expert, f.learner);
    const double gap = regret_gap(f.game, f.expert, f.learner, complete);
    const double vg = value_gap(f.game, f.expert, f.learner);
    const double elapsed = clock.ms();

    auto base = detail::row(out.name, "fig1", "fixture");
    base.H = double(H);
    base.m = 2;
    base.value_gap = vg;
    base.regret_gap = gap;
    base.runtime_ms = elapsed;
    auto occ = base;
    occ.algo = "occupancy_l1";
    out.rows.push_back(detail::bound_row(occ, 0.0, l1, tol.occupancy));
    auto rg = base;
    rg.algo = "regret_gap";
    rg = detail::equality_row(rg, double(H) - 2.0, gap, tol.equality);
    rg.pass = rg.pass && elapsed < tol.runtime_ms;
    out.rows.push_back(rg);
  }
  out.summary = "fig1 H=4..32: occupancy L1 and regret gap H-2";
  return out;
}

inline SuiteResult suite_thm5_lb(const Tolerances& tol) {
  SuiteResult out{"thm5-lb", {}, {}};
  const auto complete = DeviationClass::complete(2);
  for (std::size_t H : {4, 8, 16, 32}) {
    detail::Stopwatch clock;
    const auto f = fig1_game(H);
    JBCOptions opts;
    opts.fill = FillRule::adversarial;
    const auto sigma = j_bc(f.game, f.expert, opts);
    const auto d = occupancy_bundle(f.game, f.expert).d;
    const double bc = bc_loss(f.expert, sigma, d);
    const double gap = regret_gap(f.game, f.expert, sigma, complete);

    auto base = detail::row(out.name, "fig1", "jbc-adversarial");
    base.H = double(H);
    base.m = 2;
    base.beta = coverage_constant(f.game, f.expert);
    base.eps = bc;
    base.value_gap = value_gap(f.game, f.expert, sigma);
    base.regret_gap = gap;
    base.runtime_ms = clock.ms();
    out.rows.push_back(detail::equality_row(base, 0.0, bc, tol.equality));
    out.rows.push_back(detail::equality_row(base, double(H) - 2.0, gap, tol.equality));
  }
  out.summary = "exact J-BC with adversarial fill on fig1: BC error 0, regret gap H-2";
  return out;
}

inline SuiteResult suite_thm6_lb(const Tolerances& tol) {
  SuiteResult out{"thm6-lb", {}, {}};
  detail::Stopwatch clock;
  const std::size_t H = 20;
  const double u = 10.0, beta = 0.05, eps = 0.001;
  const auto f = coverage_lb_game(H, u, beta, eps);
  const auto d = occupancy_bundle(f.game, f.expert).d;
  const double bc = bc_loss(f.expert, f.learner, d);
  const double moment = moment_matching_error(f.game, f.expert, f.learner);
  const double gap = regret_gap(f.game, f.expert, f.learner, DeviationClass::complete(2));
  const double expected = eps * double(H) / (2.0 * beta) * (std::floor(u) - 2.0);

  auto base = detail::row(out.name, "coverage_lb", "fixture");
  base.H = double(H);
  base.m = 2;
  base.beta = beta;
  base.u = u;
  base.eps = eps;
  base.value_gap = value_gap(f.game, f.expert, f.learner);
  base.regret_gap = gap;
  base.runtime_ms = clock.ms();
  auto r1 = base;
  r1.algo = "bc_error";
  out.rows.push_back(detail::equality_row(r1, eps, bc, tol.equality));
  auto r2 = base;
  r2.algo = "moment_error";
  out.rows.push_back(detail::bound_row(r2, 2.0 * eps, moment, tol.equality));
  auto r3 = base;
  r3.algo = "regret_gap";
  out.rows.push_back(detail::equality_row(r3, expected, gap, tol.equality));
  out.summary = "coverage_lb(20,10,0.05,0.001): bc=" + detail::fmt(bc) + " moment=" + detail::fmt(moment) +
                " gap=" + detail::fmt(gap, 12);
  return out;
}

namespace detail {

struct AliceCase {
  Fixture fixture;
  DeviationClass phi;
  double expected_gap = 0.0;
  double gap = 0.0;
  std::vector<DeviatedDistribution> deviated;
};

inline AliceCase alice_case() {
  const std::size_t H = 20;
  const double u = 6.0, beta = 0.1, eps = 0.005;
  AliceCase c{alice_lb_game(H, u, beta, eps), {}, eps * double(H) * (std::floor(u) - 1.0), 0.0, {}};
  c.phi = DeviationClass::swap_class(c.fixture.game);
  c.gap = regret_gap(c.fixture.game, c.fixture.expert, c.fixture.learner, DeviationClass::complete(1));
  c.deviated = deviated_state_distributions(c.fixture.game, c.fixture.learner, c.phi);
  return c;
}

inline ReportRow alice_row(const std::string& suite, const std::string& algo, const AliceCase& c) {
  auto r = row(suite, "alice_lb", algo);
  r.H = c.fixture.params.at("H");
  r.m = 1;
  r.beta = c.fixture.params.at("beta");
  r.u = c.fixture.params.at("u");
  r.eps = c.fixture.params.at("eps");
  r.value_gap = value_gap(c.fixture.game, c.fixture.expert, c.fixture.learner);
  r.regret_gap = c.gap;
  return r;
}

}  // namespace detail

inline SuiteResult suite_thm8_lb(const Tolerances& tol) {
  SuiteResult out{"thm8-lb", {}, {}};
  detail::Stopwatch clock;
  const auto c = detail::alice_case();
  const auto& f = c.fixture;
  const double loss = malice_loss(f.expert, f.learner, occupancy_bundle(f.game, f.expert).d, c.deviated);
  auto base = detail::alice_row(out.name, "malice", c);
  base.runtime_ms = clock.ms();
  out.rows.push_back(detail::bound_row(base, f.params.at("eps"), loss, tol.equality));
  out.rows.push_back(detail::equality_row(base, c.expected_gap, c.gap, tol.equality));
  out.summary = "alice_lb: MALICE loss " + detail::fmt(loss) + ", regret gap " + detail::fmt(c.gap, 12);
  return out;
}

inline SuiteResult suite_thm10_lb(const Tolerances& tol) {
  SuiteResult out{"thm10-lb", {}, {}};
  detail::Stopwatch clock;
  const auto c = detail::alice_case();
  const auto& f = c.fixture;
  ExpertOracle oracle(f.expert);
  const double loss = blades_loss(oracle, f.learner, c.deviated);
  auto base = detail::alice_row(out.name, "blades", c);
  base.runtime_ms = clock.ms();
  out.rows.push_back(detail::bound_row(base, f.params.at("eps"), loss, tol.equality));
  out.rows.push_back(detail::equality_row(base, c.expected_gap, c.gap, tol.equality));
  out.summary = "alice_lb: BLADES loss " + detail::fmt(loss) + " with " + std::to_string(oracle.query_count()) +
                " queries, regret gap " + detail::fmt(c.gap, 12);
  return out;
}

inline SuiteResult suite_single_agent_eq(const Tolerances& tol, std::uint64_t base_seed = 7001) {
  SuiteResult out{"single-agent-eq", {}, {}};
  double worst = 0.0;
  for (std::size_t k = 0; k < 100; ++k) {
    detail::Stopwatch clock;
    Rng rng(derive_seed(base_seed, k));
    RandomGameSpec spec;
    spec.single_agent = true;
    spec.num_states = 1 + rng.index(8);
    spec.actions_per_agent = 1 + rng.index(4);
    spec.horizon = 1 + rng.index(6);
    const auto f = random_mg(spec, derive_seed(base_seed + 1, k));
    const auto complete = DeviationClass::complete(1);
    const double gap = regret_gap(f.game, f.expert, f.learner, complete);
    const double vg = value_gap(f.game, f.expert, f.learner);
    worst = std::max(worst, std::abs(gap - vg));
    auto r = detail::row(out.name, "random_mdp", "fixture");
    r.H = double(spec.horizon);
    r.m = 1;
    r.seed = double(k);
    r.value_gap = vg;
    r.regret_gap = gap;
    r.runtime_ms = clock.ms();
    out.rows.push_back(detail::equality_row(r, vg, gap, tol.single_agent));
  }
  out.summary = "100 random MDPs, worst |regret_gap - value_gap| = " + detail::fmt(worst);
  return out;
}

inline SuiteResult suite_nfg(const Tolerances& tol) {
  SuiteResult out{"nfg", {}, {}};
  detail::Stopwatch clock;
  const auto [r, rp] = multi_ce_nfg();
  const auto complete = DeviationClass::complete(2);
  const double reg1 = regret(r.game, r.expert, complete);
  const double reg2 = regret(r.game, r.learner, complete);
  const double diff = value(r.game, r.expert, 0) - value(r.game, r.learner, 0);
  const double gap = regret_gap(r.game, r.expert, r.learner, complete);
  const double vg = value_gap(r.game, r.expert, r.learner);
  const double reg1p = regret(rp.game, rp.expert, complete);
  const double ms = clock.ms();

  auto base = detail::row(out.name, "multi_ce_nfg", "");
  base.H = 1;
  base.m = 2;
  base.value_gap = vg;
  base.regret_gap = gap;
  base.runtime_ms = ms;
  const std::vector<std::pair<std::string, std::pair<double, double>>> checks{
      {"regret_sigma1", {0.0, reg1}},   {"regret_sigma2", {0.0, reg2}}, {"value_difference", {1.0 / 3.0, diff}},
      {"regret_gap", {0.0, gap}},       {"value_gap", {1.0 / 3.0, vg}}, {"regret_sigma1_rprime", {0.0, reg1p}}};
  for (const auto& [name, v] : checks) {
    auto row = base;
    row.algo = name;
    if (name == "regret_sigma1_rprime") row.fixture = "multi_ce_nfg_rprime";
    out.rows.push_back(detail::equality_row(row, v.first, v.second, tol.nfg));
  }
  out.summary = "regret gap " + detail::fmt(gap) + ", value gap " + detail::fmt(vg, 12);
  return out;
}

// ---------------------------------------------------------------- property suite (upper bounds)

/// Identity plus `extra` random stationary deviations per agent.
inline DeviationClass random_deviation_class(const MarkovGame& game, Rng& rng, std::size_t extra) {
  std::vector<AgentDeviations> per;
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    std::vector<Deviation> list{Deviation::identity(game, i)};
    for (std::size_t k = 0; k < extra; ++k) {
      auto phi = Deviation::identity(game, i);
      for (std::size_t s = 0; s < game.num_states(); ++s) {
        for (std::size_t a = 0; a < game.num_actions(i); ++a) {
          if (rng.uniform() < 0.5) phi.set(0, s, a, rng.index(game.num_actions(i)));
        }
      }
      list.push_back(std::move(phi));
    }
    per.emplace_back(std::move(list));
  }
  return DeviationClass(std::move(per));
}

struct TrainedCase {
  std::string algo;
  MediatorPolicy policy;
  double eps = 0.0;
  double gap = 0.0;
  double value_gap = 0.0;
  double bound = 0.0;
  std::size_t queries = 0;
  double runtime_ms = 0.0;
};

struct PropertyCase {
  std::size_t index = 0;
  Fixture fixture;
  DeviationClass phi;
  double beta = 0.0;
  double u = 0.0;
  double expert_regret = 0.0;
  std::vector<TrainedCase> trained;  // jbc, malice, blades
};

inline constexpr std::uint64_t kPropertySeed = 77;
inline constexpr std::size_t kPropertyGames = 50;
inline constexpr std::size_t kPropertyRounds = 500;
inline constexpr std::size_t kPropertyDemos = 50;

inline PropertyCase property_case(std::size_t g, std::uint64_t base_seed = kPropertySeed) {
  Rng rng(derive_seed(base_seed, g));
  RandomGameSpec spec;
  spec.num_states = 2 + rng.index(5);
  spec.num_agents = 2;
  spec.actions_per_agent = 2 + rng.index(2);
  spec.horizon = 2 + rng.index(5);
  spec.full_coverage_expert = true;

  PropertyCase c;
  c.index = g;
  c.fixture = random_mg(spec, derive_seed(base_seed + 1, g));
  const auto& game = c.fixture.game;
  const auto& expert = c.fixture.expert;
  c.phi = random_deviation_class(game, rng, 3);
  c.u = recoverability_constant(game, expert, c.phi);
  c.beta = coverage_constant(game, expert);
  c.expert_regret = regret(game, expert, c.phi);
  const double H = double(game.horizon());
  const auto d_expert = occupancy_bundle(game, expert).d;
  const auto demos = sample_demonstrations(game, expert, kPropertyDemos, derive_seed(base_seed + 2, g));

  auto finish = [&](TrainedCase t, const detail::Stopwatch& clock) {
    t.gap = regret(game, t.policy, c.phi) - c.expert_regret;
    t.value_gap = value_gap(game, expert, t.policy);
    t.runtime_ms = clock.ms();
    c.trained.push_back(std::move(t));
  };
  {
    detail::Stopwatch clock;
    TrainedCase t{"jbc", j_bc(game, demos), 0, 0, 0, 0, 0, 0};
    t.eps = bc_loss(expert, t.policy, d_expert);
    t.bound = t.eps / c.beta * c.u * H + 2.0 * t.eps * c.u * H;
    finish(std::move(t), clock);
  }
  TrainConfig tc;
  tc.phi = c.phi;
  tc.oco.rounds = kPropertyRounds;
  {
    detail::Stopwatch clock;
    const auto res = malice_train(game, malice_data_exact(game, expert), MediatorPolicy::uniform(game), tc);
    TrainedCase t{"malice", res.policy, res.self_consistent_loss, 0, 0, 0, 0, 0};
    t.bound = 2.0 * t.eps * c.u * H;
    finish(std::move(t), clock);
  }
  {
    detail::Stopwatch clock;
    ExpertOracle oracle(expert);
    const auto res = blades_train(game, oracle, demos, tc);
    TrainedCase t{"blades", res.policy, res.self_consistent_loss, 0, 0, 0, res.queries, 0};
    t.bound = 2.0 * t.eps * c.u * H;
    finish(std::move(t), clock);
  }
  return c;
}

/// Lazily computed property suite shared by the upper-bound and CE suites.
class PropertySuite {
 public:
  const std::vector<PropertyCase>& cases() {
    if (!cases_) {
      cases_.emplace();
      for (std::size_t g = 0; g < kPropertyGames; ++g) cases_->push_back(property_case(g));
    }
    return *cases_;
  }

 private:
  std::optional<std::vector<PropertyCase>> cases_;
};

inline SuiteResult suite_upper_bound(const std::string& name, const std::string& algo, PropertySuite& suite,
                                     const Tolerances& tol) {
  SuiteResult out{name, {}, {}};
  double worst_ratio = 0.0;
  std::size_t min_queries = static_cast<std::size_t>(-1);
  for (const auto& c : suite.cases()) {
    for (const auto& t : c.trained) {
      if (t.algo != algo) continue;
      auto r = detail::row(name, "random_full_coverage", algo);
      r.H = double(c.fixture.game.horizon());
      r.m = 2;
      r.beta = c.beta;
      r.u = c.u;
      r.eps = t.eps;
      r.N = algo == "jbc" ? double(kPropertyDemos) : double(kPropertyRounds);
      r.seed = double(c.index);
      r.value_gap = t.value_gap;
      r.regret_gap = t.gap;
      r.runtime_ms = t.runtime_ms;
      r = detail::bound_row(r, t.bound, t.gap, tol.bound_slack);
      if (algo == "blades") {
        r.pass = r.pass && t.queries > 0;
        min_queries = std::min(min_queries, t.queries);
      }
      if (t.bound > 0.0) worst_ratio = std::max(worst_ratio, t.gap / t.bound);
      out.rows.push_back(r);
    }
  }
  out.summary = std::to_string(out.rows.size() - out.failures()) + "/" + std::to_string(out.rows.size()) +
                " within bound, max gap/bound " + detail::fmt(worst_ratio, 3);
  if (algo == "blades") out.summary += ", min queries " + std::to_string(min_queries);
  return out;
}

inline SuiteResult suite_ce_composition(PropertySuite& suite, const Tolerances& tol) {
  SuiteResult out{"ce-composition", {}, {}};
  for (const auto& c : suite.cases()) {
    for (const auto& t : c.trained) {
      const double delta = c.expert_regret + t.gap + tol.ce;
      auto r = detail::row(out.name, "random_full_coverage", t.algo);
      r.H = double(c.fixture.game.horizon());
      r.m = 2;
      r.seed = double(c.index);
      r.regret_gap = t.gap;
      r.bound = delta;
      r.measured = regret(c.fixture.game, t.policy, c.phi);
      r.pass = is_approx_ce(c.fixture.game, t.policy, c.phi, delta);
      out.rows.push_back(r);
    }
  }
  out.summary = std::to_string(out.rows.size() - out.failures()) + "/" + std::to_string(out.rows.size()) +
                " trained policies certified";
  return out;
}

// ---------------------------------------------------------------- J-IRL

inline SuiteResult suite_jirl_ub(const Tolerances& tol, std::uint64_t base_seed = 1000) {
  SuiteResult out{"jirl-ub", {}, {}};
  double worst = 0.0;
  for (std::size_t g = 0; g < 20; ++g) {
    detail::Stopwatch clock;
    RandomGameSpec spec;
    spec.num_states = 4;
    spec.num_agents = 2;
    spec.actions_per_agent = 2;
    spec.horizon = 3 + g % 3;
    spec.common_payoff = true;
    const auto f = random_mg(spec, base_seed + g);
    JIRLConfig config;
    config.rounds = 500;
    const auto res = j_irl(f.game, occupancy_bundle(f.game, f.expert), config);
    const double H = double(f.game.horizon());
    const double vg = value_gap(f.game, f.expert, res.policy);
    worst = std::max(worst, res.moment_error);

    auto base = detail::row(out.name, "random_common_payoff", "jirl");
    base.H = H;
    base.m = 2;
    base.eps = res.moment_error;
    base.N = double(config.rounds);
    base.seed = double(base_seed + g);
    base.value_gap = vg;
    base.regret_gap = regret_gap(f.game, f.expert, res.policy, DeviationClass::complete(2));
    base.runtime_ms = clock.ms();
    out.rows.push_back(detail::bound_row(base, res.moment_error * H, vg, tol.equality));
    out.rows.push_back(detail::bound_row(base, tol.jirl_moment, res.moment_error, 0.0));
  }
  out.summary = "20 common-payoff games, worst normalized moment error " + detail::fmt(worst, 4);
  return out;
}

// ---------------------------------------------------------------- lemma / oracle / OCO

inline SuiteResult suite_lemma1(const Tolerances& tol, std::uint64_t base_seed = 11) {
  SuiteResult out{"lemma1", {}, {}};
  std::size_t stated_fail = 0, doubled_fail = 0, checks = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < 200; ++k) {
    Rng rng(derive_seed(base_seed, k));
    RandomGameSpec spec;
    spec.num_states = 2 + rng.index(5);
    spec.num_agents = 1 + rng.index(2);
    spec.actions_per_agent = 2 + rng.index(2);
    spec.horizon = 1 + rng.index(5);
    const auto f = random_mg(spec, derive_seed(base_seed + 1, k));
    const auto& pi1 = f.expert;
    const auto& pi2 = f.learner;
    const double eps = weighted_tv_loss(pi1, pi2, occupancy_bundle(f.game, pi2).d);
    double u = 0.0;
    for (std::size_t i = 0; i < f.game.num_agents(); ++i) u = std::max(u, max_abs_advantage(f.game, pi1, i));
    const double H = double(f.game.horizon());
    for (std::size_t i = 0; i < f.game.num_agents(); ++i) {
      const double lhs = std::abs(value(f.game, pi1, i) - value(f.game, pi2, i));
      auto r = detail::row(out.name, "random", "agent" + std::to_string(i));
      r.H = H;
      r.m = double(f.game.num_agents());
      r.u = u;
      r.eps = eps;
      r.seed = double(k);
      r = detail::bound_row(r, eps * u * H, lhs, tol.lemma);
      ++checks;
      if (!r.pass) ++stated_fail;
      if (lhs > 2.0 * eps * u * H + tol.lemma) ++doubled_fail;
      if (eps * u * H > 0.0) worst = std::max(worst, lhs / (eps * u * H));
      out.rows.push_back(r);
    }
  }
  out.summary = std::to_string(stated_fail) + "/" + std::to_string(checks) + " exceed eps*u*H (worst ratio " +
                detail::fmt(worst, 3) + "); " + std::to_string(doubled_fail) + " exceed 2*eps*u*H";
  return out;
}

inline constexpr std::size_t kBrMaxTotalStates = 8;

inline SuiteResult suite_br_oracle(const Tolerances& tol, std::uint64_t base_seed = 21) {
  SuiteResult out{"br-oracle", {}, {}};
  double worst = 0.0;
  for (std::size_t k = 0; k < 200; ++k) {
    detail::Stopwatch clock;
    Rng rng(derive_seed(base_seed, k));
    const std::size_t layers = 1 + rng.index(2);
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    for (std::size_t h = 0; h < layers; ++h) {
      std::size_t n = 1 + rng.index(6);
      if (total + n > kBrMaxTotalStates) n = std::max<std::size_t>(1, kBrMaxTotalStates - total);
      sizes.push_back(n);
      total += n;
    }
    RandomGameSpec spec;
    spec.num_agents = 2;
    spec.actions_per_agent = 2;
    spec.horizon = layers;
    spec.layered = true;
    spec.layer_sizes = sizes;
    spec.num_states = total;
    const auto f = random_mg(spec, derive_seed(base_seed + 1, k));
    for (std::size_t i = 0; i < 2; ++i) {
      const auto br = best_response_deviation(f.game, f.learner, i);
      const auto en = stationary_enumeration_best(f.game, f.learner, i);
      worst = std::max(worst, std::abs(br.gain - en.gain));
      auto r = detail::row(out.name, "random_layered", "agent" + std::to_string(i));
      r.H = double(layers);
      r.m = 2;
      r.seed = double(k);
      r.runtime_ms = clock.ms();
      r = detail::equality_row(r, en.gain, br.gain, tol.best_response);
      r.pass = r.pass && br.exact_stationary;
      out.rows.push_back(r);
    }
  }
  out.summary = "200 layered games, worst |DP - enumeration| = " + detail::fmt(worst);
  return out;
}

namespace detail {

/// Exact minimum of the average of per-round TV losses over the 1/24 grid of the 4-simplex.
inline double best_fixed_on_grid(const std::vector<std::vector<double>>& targets) {
  constexpr int kGrid = 24;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> p(4);
  for (int a = 0; a <= kGrid; ++a) {
    for (int b = 0; a + b <= kGrid; ++b) {
      for (int c = 0; a + b + c <= kGrid; ++c) {
        p = {a / double(kGrid), b / double(kGrid), c / double(kGrid), (kGrid - a - b - c) / double(kGrid)};
        double total = 0.0;
        for (const auto& t : targets) total += tv(p, t);
        best = std::min(best, total / double(targets.size()));
      }
    }
  }
  return best;
}

inline std::vector<double> grid_point(Rng& rng) {
  constexpr std::size_t kGrid = 24;
  std::vector<std::size_t> cuts{rng.index(kGrid + 1), rng.index(kGrid + 1), rng.index(kGrid + 1)};
  std::sort(cuts.begin(), cuts.end());
  return {cuts[0] / 24.0, (cuts[1] - cuts[0]) / 24.0, (cuts[2] - cuts[1]) / 24.0, (kGrid - cuts[2]) / 24.0};
}

}  // namespace detail

/// Named adversarial target sequences over a 1-state, 4-action space.
inline std::vector<std::pair<std::string, std::vector<std::vector<double>>>> oco_sequences(std::size_t N,
                                                                                        std::uint64_t seed) {
  const std::vector<std::vector<double>> e{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  std::vector<std::pair<std::string, std::vector<std::vector<double>>>> out;
  std::vector<std::vector<double>> alt, cyc, halves, rnd, skew;
  Rng rng(seed);
  for (std::size_t n = 0; n < N; ++n) {
    alt.push_back(e[n % 2]);
    cyc.push_back(e[n % 4]);
    halves.push_back(n < N / 2 ? e[0] : e[1]);
    rnd.push_back(detail::grid_point(rng));
    skew.push_back(n % 3 == 2 ? e[3] : std::vector<double>{0.5, 0.0, 0.25, 0.25});
  }
  out.emplace_back("alternating", std::move(alt));
  out.emplace_back("cyclic", std::move(cyc));
  out.emplace_back("switch-halves", std::move(halves));
  out.emplace_back("random-grid", std::move(rnd));
  out.emplace_back("skewed", std::move(skew));
  return out;
}

inline SuiteResult suite_oco_regret(const Tolerances& /*tol*/, std::size_t N = 4096, std::uint64_t seed = 31) {
  SuiteResult out{"oco-regret", {}, {}};
  const double bound = 2.0 * std::sqrt(std::log(4.0) / double(N));
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [name, targets] : oco_sequences(N, seed)) {
    detail::Stopwatch clock;
    std::vector<CompositeMaxLoss> losses;
    losses.reserve(targets.size());
    for (const auto& t : targets) {
      losses.push_back(CompositeMaxLoss::single(WeightedTVLoss({1.0}, MediatorPolicy(1, 4, t))));
    }
    OCOConfig config;
    config.rounds = N;
    const auto run = oco_run(MediatorPolicy(1, 4, std::vector<double>(4, 0.25)), losses, config);
    double played = 0.0;
    for (const auto& t : run.trace) played += t.loss;
    const double avg_regret = played / double(N) - detail::best_fixed_on_grid(targets);
    worst = std::max(worst, avg_regret);
    auto r = detail::row(out.name, name, to_string(config.rule));
    r.N = double(N);
    r.seed = double(seed);
    r.runtime_ms = clock.ms();
    out.rows.push_back(detail::bound_row(r, bound, avg_regret, 0.0));
  }
  out.summary = "worst average regret " + detail::fmt(worst, 4) + " vs bound " + detail::fmt(bound, 4);
  return out;
}

// ---------------------------------------------------------------- converse direction

inline SuiteResult suite_thm1_direction(const Tolerances& tol) {
  SuiteResult out{"thm1-direction", {}, {}};
  for (std::size_t H : {4, 8}) {
    detail::Stopwatch clock;
    const auto f = fig1_game(H);
    const auto complete = DeviationClass::complete(2);
    const std::size_t SA = f.game.num_states() * f.game.num_joint_actions();
    double max_regret_gap = -std::numeric_limits<double>::infinity();
    double max_abs_value_gap = 0.0;
    double max_self_gap = 0.0;
    std::vector<double> indicator(SA, 0.0);
    for (std::size_t k = 0; k < SA; ++k) {
      std::fill(indicator.begin(), indicator.end(), 0.0);
      indicator[k] = 1.0;
      const auto g = f.game.with_common_reward(indicator);
      max_regret_gap = std::max(max_regret_gap, regret_gap(g, f.expert, f.learner, complete));
      for (std::size_t i = 0; i < 2; ++i) {
        max_abs_value_gap = std::max(max_abs_value_gap, std::abs(value(g, f.expert, i) - value(g, f.learner, i)));
      }
      max_self_gap = std::max(max_self_gap, std::abs(regret_gap(g, f.expert, f.expert, complete)));
    }
    const double true_gap = regret_gap(f.game, f.expert, f.learner, complete);
    const double self_l1 = moment_matching_error(f.game, f.expert, f.expert);
    const double ms = clock.ms();

    auto base = detail::row(out.name, "fig1", "");
    base.H = double(H);
    base.m = 2;
    base.runtime_ms = ms;
    auto r1 = base;
    r1.algo = "max_indicator_regret_gap_positive";
    r1.measured = max_regret_gap;
    r1.pass = max_regret_gap > tol.equality;
    out.rows.push_back(r1);
    auto r2 = base;
    r2.algo = "true_reward_regret_gap";
    out.rows.push_back(detail::equality_row(r2, double(H) - 2.0, true_gap, tol.equality));
    auto r3 = base;
    r3.algo = "max_indicator_value_gap";
    out.rows.push_back(detail::equality_row(r3, 0.0, max_abs_value_gap, tol.equality));
    auto r4 = base;
    r4.algo = "expert_self_indicator_regret_gap";
    out.rows.push_back(detail::equality_row(r4, 0.0, max_self_gap, tol.equality));
    auto r5 = base;
    r5.algo = "expert_self_occupancy_l1";
    out.rows.push_back(detail::bound_row(r5, 0.0, self_l1, tol.occupancy));
  }
  out.summary = "indicator-reward sweep on fig1 H=4,8";
  return out;
}

// ---------------------------------------------------------------- registry

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "thm3",           "thm5-lb", "thm6-lb",   "thm8-lb",    "thm10-lb", "single-agent-eq", "nfg",
      "malice-ub",      "blades-ub", "jbc-ub",  "jirl-ub",    "lemma1",   "oco-regret",      "ce-composition",
      "thm1-direction", "br-oracle"};
  return names;
}

/// Runs suites by name, sharing the property-suite computation between calls.
class SuiteRunner {
 public:
  explicit SuiteRunner(Tolerances tol = {}) : tol_(tol) {}

  [[nodiscard]] static bool known(const std::string& name) {
    if (name == "all") return true;
    const auto& names = suite_names();
    return std::find(names.begin(), names.end(), name) != names.end();
  }

  SuiteResult run(const std::string& name) {
    if (name == "thm3") return suite_thm3(tol_);
    if (name == "thm5-lb") return suite_thm5_lb(tol_);
    if (name == "thm6-lb" || name == "coverage") return suite_thm6_lb(tol_);
    if (name == "thm8-lb") return suite_thm8_lb(tol_);
    if (name == "thm10-lb") return suite_thm10_lb(tol_);
    if (name == "single-agent-eq") return suite_single_agent_eq(tol_);
    if (name == "nfg") return suite_nfg(tol_);
    if (name == "malice-ub") return suite_upper_bound(name, "malice", property_, tol_);
    if (name == "blades-ub") return suite_upper_bound(name, "blades", property_, tol_);
    if (name == "jbc-ub") return suite_upper_bound(name, "jbc", property_, tol_);
    if (name == "jirl-ub") return suite_jirl_ub(tol_);
    if (name == "lemma1") return suite_lemma1(tol_);
    if (name == "oco-regret") return suite_oco_regret(tol_);
    if (name == "ce-composition") return suite_ce_composition(property_, tol_);
    if (name == "thm1-direction") return suite_thm1_direction(tol_);
    if (name == "br-oracle") return suite_br_oracle(tol_);
    throw std::invalid_argument("unknown suite '" + name + "'");
  }

  std::vector<SuiteResult> run_all() {
    std::vector<SuiteResult> out;
    for (const auto& name : suite_names()) out.push_back(run(name));
    return out;
  }

 private:
  Tolerances tol_;
  PropertySuite property_;
};

}  // namespace mailab::harness
