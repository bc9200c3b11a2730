#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mailab/harness/sweep.hpp"
#include "mailab/mailab.hpp"

namespace fs = std::filesystem;
using namespace mailab;
using harness::ConfigError;

namespace {

enum ExitCode { kPass = 0, kCheckFailure = 1, kUsage = 2, kAssumption = 3 };

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

template <class F>
void write_stream(const fs::path& path, F&& f) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  f(out);
}

MarkovGame load_game(const fs::path& path, double reward_bound) {
  auto game = game_from_json(read_json_file(path));
  const auto report = validate_game(game, {reward_bound});
  if (!report.ok()) throw FormatError(path.string() + ": " + report.violations.front());
  return game;
}

MediatorPolicy load_policy(const fs::path& path, const MarkovGame& game) {
  auto policy = policy_from_json(read_json_file(path));
  const auto problems = validate_policy(game, policy);
  if (!problems.empty()) throw FormatError(path.string() + ": " + problems.front());
  return policy;
}

void print_paths(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string name;
  std::size_t horizon = 8;
  double u = 4.0;
  double beta = 0.1;
  double eps = 0.001;
  std::uint64_t seed = 0;
  std::size_t states = 4;
  std::size_t agents = 2;
  std::size_t actions = 2;
  bool common_payoff = false;
  bool full_coverage = false;
  bool layered = false;
  std::string out = ".";
};

int cmd_gen(const GenArgs& a) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  std::vector<fs::path> written;
  auto save = [&](const std::string& file, const Json& j) {
    written.push_back(dir / file);
    write_json_file(written.back(), j);
  };
  if (a.name == "multi-ce-nfg" || a.name == "multi_ce_nfg") {
    const auto [r, rp] = multi_ce_nfg();
    save("game_r.json", to_json(r.game));
    save("game_rprime.json", to_json(rp.game));
    save("sigma1.json", to_json(r.expert));
    save("sigma2.json", to_json(r.learner));
    save("expected.json", {{"r", expected_to_json(r)}, {"rprime", expected_to_json(rp)}});
    print_paths(written);
    return kPass;
  }
  Fixture f;
  try {
    if (a.name == "fig1") {
      f = fig1_game(a.horizon);
    } else if (a.name == "coverage-lb" || a.name == "coverage_lb") {
      f = coverage_lb_game(a.horizon, a.u, a.beta, a.eps);
    } else if (a.name == "alice-lb" || a.name == "alice_lb") {
      f = alice_lb_game(a.horizon, a.u, a.beta, a.eps);
    } else if (a.name == "random") {
      RandomGameSpec spec;
      spec.num_states = a.states;
      spec.num_agents = a.agents;
      spec.actions_per_agent = a.actions;
      spec.horizon = a.horizon;
      spec.common_payoff = a.common_payoff;
      spec.full_coverage_expert = a.full_coverage;
      spec.layered = a.layered;
      f = random_mg(spec, a.seed);
    } else {
      throw ConfigError("unknown fixture '" + a.name + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  save("game.json", to_json(f.game));
  save("expert.json", to_json(f.expert));
  save("learner.json", to_json(f.learner));
  save("deviations.json", witnesses_to_json(f.witnesses));
  save("expected.json", expected_to_json(f));
  print_paths(written);
  return kPass;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string game, expert, policy;
  std::string deviations = "complete";
  std::string deviation_file;
  double reward_bound = 1.0;
  bool require_coverage = false;
  std::string out = ".";
};

DeviationClass load_class(const std::string& source, const std::string& file, const MarkovGame& game) {
  if (source == "complete") return DeviationClass::complete(game.num_agents());
  if (source == "swap") return DeviationClass::swap_class(game);
  if (source == "file") {
    if (file.empty()) throw ConfigError("--deviations file needs --deviation-file");
    return deviation_class_from_json(read_json_file(file), game);
  }
  throw ConfigError("unknown deviation source '" + source + "'");
}

int cmd_eval(const EvalArgs& a) {
  const auto game = load_game(a.game, a.reward_bound);
  const auto expert = load_policy(a.expert, game);
  const auto sigma = load_policy(a.policy, game);
  const auto phi = load_class(a.deviations, a.deviation_file, game);
  const auto report = evaluate(game, expert, sigma, phi);
  if (a.require_coverage && !(report.beta > 0.0)) {
    throw CoverageViolation("expert state distribution has zero coverage (beta = 0)");
  }
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_json_file(dir / "report.json", to_json(report, game));

  ReportRow row;
  row.suite = "eval";
  row.fixture = fs::path(a.game).stem().string();
  row.algo = a.deviations;
  row.H = double(game.horizon());
  row.m = double(game.num_agents());
  row.beta = report.beta;
  row.u = report.u;
  row.value_gap = report.value_gap;
  row.regret_gap = report.regret_gap;
  row.measured = report.regret_gap;
  row.pass = true;
  write_stream(dir / "report.csv", [&](std::ostream& os) { write_report_csv(os, {row}); });
  std::cout << "regret " << report.regret.regret << "  expert_regret " << report.expert_regret << "  regret_gap "
            << report.regret_gap << "  value_gap " << report.value_gap << '\n';
  print_paths({dir / "report.json", dir / "report.csv"});
  return kPass;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string algo, game, expert;
  std::string deviations = "swap";
  std::string deviation_file;
  std::size_t rounds = 500;
  std::string rule = "eg";
  double rate_scale = 1.0;
  double prior_mix = 1e-3;
  std::size_t demos = 10;
  std::uint64_t seed = 0;
  bool exact = false;
  std::string fill = "uniform";
  std::string oracle_mode = "full-row";
  bool monte_carlo = false;
  std::size_t mc_samples = 1000;
  std::string player = "exact-br";
  double temperature = 0.05;
  double regularizer = 0.0;
  double reward_bound = 1.0;
  std::string out = ".";
};

int cmd_train(const TrainArgs& a) {
  const auto game = load_game(a.game, a.reward_bound);
  const auto expert = load_policy(a.expert, game);
  const fs::path dir(a.out);
  ensure_dir(dir);
  const auto phi = load_class(a.deviations, a.deviation_file, game);
  if (a.demos == 0) throw ConfigError("--demos must be positive");

  TrainConfig tc;
  tc.phi = phi;
  tc.oco.rounds = a.rounds;
  tc.oco.rate_scale = a.rate_scale;
  tc.oco.prior_mix = a.prior_mix;
  tc.oco.seed = a.seed;
  tc.monte_carlo = a.monte_carlo;
  tc.mc_samples = a.mc_samples;
  tc.seed = a.seed;
  if (a.rule == "eg") {
    tc.oco.rule = UpdateRule::exponentiated_gradient;
  } else if (a.rule == "pgd") {
    tc.oco.rule = UpdateRule::projected_subgradient;
  } else {
    throw ConfigError("unknown OCO rule '" + a.rule + "'");
  }

  Json summary{{"algo", a.algo}};
  MediatorPolicy sigma;
  std::optional<std::vector<TraceRow>> trace;
  if (a.algo == "jbc") {
    JBCOptions opts;
    if (a.fill == "uniform") {
      opts.fill = FillRule::uniform;
    } else if (a.fill == "adversarial") {
      opts.fill = FillRule::adversarial;
    } else if (a.fill == "copy-expert") {
      opts.fill = FillRule::copy_expert;
    } else {
      throw ConfigError("unknown fill rule '" + a.fill + "'");
    }
    sigma = a.exact ? j_bc(game, expert, opts)
                    : j_bc(game, sample_demonstrations(game, expert, a.demos, a.seed), opts, &expert);
    summary["final_loss"] = bc_loss(expert, sigma, occupancy_bundle(game, expert).d);
  } else if (a.algo == "jirl") {
    JIRLConfig jc;
    jc.rounds = a.rounds;
    if (a.player == "exact-br") {
      jc.player = PolicyPlayer::exact_br;
    } else if (a.player == "soft-vi") {
      jc.player = PolicyPlayer::soft_vi;
    } else {
      throw ConfigError("unknown policy player '" + a.player + "'");
    }
    jc.temperature = a.temperature;
    jc.regularizer = a.regularizer;
    const auto res = j_irl(game, occupancy_bundle(game, expert), jc);
    sigma = res.policy;
    summary["final_loss"] = res.moment_error;
    summary["best_round"] = res.best_round;
    summary["best_is_mixture"] = res.best_is_mixture;
    write_stream(dir / "trace.csv", [&](std::ostream& os) {
      os << "round,moment_error,best_so_far\n";
      for (std::size_t k = 0; k < res.iterate_errors.size(); ++k) {
        os << k + 1 << ',' << res.iterate_errors[k] << ',' << res.best_so_far[k] << '\n';
      }
    });
  } else if (a.algo == "malice") {
    const auto data = a.monte_carlo
                          ? malice_data_from_demos(game, sample_demonstrations(game, expert, a.demos, a.seed))
                          : malice_data_exact(game, expert);
    const auto res = malice_train(game, data, MediatorPolicy::uniform(game), tc);
    sigma = res.policy;
    trace = res.trace;
    summary["final_loss"] = res.self_consistent_loss;
    summary["best_round"] = res.best_round;
  } else if (a.algo == "blades") {
    OracleMode mode;
    if (a.oracle_mode == "full-row") {
      mode = OracleMode::full_row;
    } else if (a.oracle_mode == "sampled-action") {
      mode = OracleMode::sampled_action;
    } else {
      throw ConfigError("unknown oracle mode '" + a.oracle_mode + "'");
    }
    ExpertOracle oracle(expert, mode, a.seed);
    const auto res = blades_train(game, oracle, sample_demonstrations(game, expert, a.demos, a.seed), tc);
    sigma = res.policy;
    trace = res.trace;
    summary["final_loss"] = res.self_consistent_loss;
    summary["best_round"] = res.best_round;
    summary["queries"] = res.queries;
    write_stream(dir / "oracle_log.jsonl", [&](std::ostream& os) { write_oracle_log(os, oracle.log()); });
  } else {
    throw ConfigError("unknown algorithm '" + a.algo + "'");
  }

  const auto complete = DeviationClass::complete(game.num_agents());
  const double H = double(game.horizon());
  summary["value_gap"] = value_gap(game, expert, sigma);
  summary["regret_gap"] = regret_gap(game, expert, sigma, complete);
  if (phi.all_explicit()) {
    const double u = recoverability_constant(game, expert, phi);
    summary["regret_gap_train_class"] = regret_gap(game, expert, sigma, phi);
    summary["u_train_class"] = u;
    if (a.algo == "malice" || a.algo == "blades") summary["bound"] = 2.0 * summary["final_loss"].get<double>() * u * H;
  }
  write_json_file(dir / "policy.json", to_json(sigma));
  write_json_file(dir / "summary.json", summary);
  if (trace) write_stream(dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, *trace); });
  std::cout << summary.dump(2) << '\n';
  return kPass;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const std::string& suite, double tolerance, const std::string& out) {
  if (!harness::SuiteRunner::known(suite)) throw ConfigError("unknown suite '" + suite + "'");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  harness::Tolerances tol;
  tol.equality = tolerance;
  harness::SuiteRunner runner(tol);
  std::vector<harness::SuiteResult> results;
  if (suite == "all") {
    results = runner.run_all();
  } else {
    results.push_back(runner.run(suite));
  }
  std::vector<ReportRow> rows;
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.rows.size() - r.failures() << "/"
              << r.rows.size() << " checks; " << r.summary << '\n';
    ok = ok && r.passed();
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  }
  if (!out.empty()) {
    ensure_dir(out);
    write_stream(fs::path(out) / "report.csv", [&](std::ostream& os) { write_report_csv(os, rows); });
  }
  return ok ? kPass : kCheckFailure;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const std::string& config_path, std::optional<std::string> out, std::optional<std::size_t> jobs) {
  auto config = harness::sweep_config_from_json(read_json_file(config_path));
  if (out) config.out = *out;
  if (jobs) {
    if (*jobs == 0) throw ConfigError("jobs must be positive");
    config.jobs = *jobs;
  }
  const auto result = harness::run_sweep(config);
  const fs::path dir(config.out);
  ensure_dir(dir);
  write_stream(dir / "report.csv", [&](std::ostream& os) { write_report_csv(os, result.rows); });
  const auto summary = harness::sweep_summary(config, result);
  write_json_file(dir / "summary.json", summary);
  std::cout << summary.dump(2) << '\n';
  return result.passed() ? kPass : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent imitation learning lab: fixtures, exact evaluation, training and verification"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write a fixture's game, policies, witness deviations and expected values");
  g->add_option("--name", gen.name, "fig1 | coverage-lb | alice-lb | multi-ce-nfg | random")->required();
  g->add_option("--horizon,-H", gen.horizon, "Horizon H");
  g->add_option("--u", gen.u, "Recoverability parameter u");
  g->add_option("--beta", gen.beta, "Coverage parameter beta");
  g->add_option("--eps", gen.eps, "Error parameter eps");
  g->add_option("--seed", gen.seed, "Seed (random fixture)");
  g->add_option("--states", gen.states, "State count (random fixture)");
  g->add_option("--agents", gen.agents, "Agent count (random fixture)");
  g->add_option("--actions", gen.actions, "Actions per agent (random fixture)");
  g->add_flag("--common-payoff", gen.common_payoff, "Shared reward (random fixture)");
  g->add_flag("--full-coverage", gen.full_coverage, "Mix the expert with uniform (random fixture)");
  g->add_flag("--layered", gen.layered, "Time-layered states (random fixture)");
  g->add_option("--out", gen.out, "Output directory");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Exact evaluation of a policy against an expert");
  e->add_option("--game", ev.game)->required()->check(CLI::ExistingFile);
  e->add_option("--expert", ev.expert)->required()->check(CLI::ExistingFile);
  e->add_option("--policy", ev.policy)->required()->check(CLI::ExistingFile);
  e->add_option("--deviations", ev.deviations, "complete | swap | file");
  e->add_option("--deviation-file", ev.deviation_file)->check(CLI::ExistingFile);
  e->add_option("--reward-bound", ev.reward_bound, "Allowed |reward|");
  e->add_flag("--require-coverage", ev.require_coverage, "Exit 3 when the expert leaves a state unvisited");
  e->add_option("--out", ev.out, "Output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a mediator policy");
  t->add_option("--algo", tr.algo, "jbc | jirl | malice | blades")->required();
  t->add_option("--game", tr.game)->required()->check(CLI::ExistingFile);
  t->add_option("--expert", tr.expert)->required()->check(CLI::ExistingFile);
  t->add_option("--deviations", tr.deviations, "Training class: swap | file");
  t->add_option("--deviation-file", tr.deviation_file)->check(CLI::ExistingFile);
  t->add_option("--rounds,-N", tr.rounds, "Rounds");
  t->add_option("--rule", tr.rule, "eg | pgd");
  t->add_option("--rate-scale", tr.rate_scale, "Step size scale");
  t->add_option("--prior-mix", tr.prior_mix, "Uniform mass in the EG prior");
  t->add_option("--demos", tr.demos, "Expert demonstrations");
  t->add_option("--seed", tr.seed);
  t->add_flag("--exact", tr.exact, "J-BC from the exact expert instead of demonstrations");
  t->add_option("--fill", tr.fill, "J-BC off-support fill: uniform | adversarial | copy-expert");
  t->add_option("--oracle-mode", tr.oracle_mode, "full-row | sampled-action");
  t->add_flag("--monte-carlo", tr.monte_carlo, "Estimate state distributions from rollouts");
  t->add_option("--mc-samples", tr.mc_samples);
  t->add_option("--player", tr.player, "J-IRL policy player: exact-br | soft-vi");
  t->add_option("--temperature", tr.temperature);
  t->add_option("--regularizer", tr.regularizer);
  t->add_option("--reward-bound", tr.reward_bound);
  t->add_option("--out", tr.out, "Output directory");

  std::string suite;
  double tolerance = 1e-9;
  std::string verify_out;
  auto* v = app.add_subcommand("verify", "Run a verification suite");
  v->add_option("--suite", suite, "Suite name or 'all'")->required();
  v->add_option("--tolerance", tolerance, "Closed-form equality tolerance");
  v->add_option("--out", verify_out, "Directory for report.csv");

  std::string sweep_config;
  std::optional<std::string> sweep_out;
  std::optional<std::size_t> sweep_jobs;
  auto* s = app.add_subcommand("sweep", "Run a parameter sweep from a JSON config");
  s->add_option("--config", sweep_config)->required()->check(CLI::ExistingFile);
  s->add_option("--out", sweep_out, "Override the output directory");
  s->add_option("--jobs", sweep_jobs, "Override the parallelism degree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (e->parsed()) return cmd_eval(ev);
    if (t->parsed()) return cmd_train(tr);
    if (v->parsed()) return cmd_verify(suite, tolerance, verify_out);
    if (s->parsed()) return cmd_sweep(sweep_config, sweep_out, sweep_jobs);
  } catch (const CoverageViolation& err) {
    std::cerr << "assumption violated: " << err.what() << '\n';
    return kAssumption;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
