// Acceptance driver: one PASS/FAIL line per criterion.
//   acceptance [--known-fail K ...] [--only K ...] [--report FILE]
// Exit status is 0 when every criterion outside --known-fail passes.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "mailab/harness/suites.hpp"

using namespace mailab;
using namespace mailab::harness;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> suites;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {1, "fig1 regret gap H-2 with identical occupancies", {"thm3"}},
      {2, "coverage lower-bound instance", {"thm6-lb"}},
      {3, "MALICE and BLADES lower-bound instance", {"thm8-lb", "thm10-lb"}},
      {4, "J-BC and MALICE upper bounds on random games", {"jbc-ub", "malice-ub"}},
      {5, "BLADES upper bound on random games", {"blades-ub"}},
      {6, "CE composition", {"ce-composition"}},
      {7, "single-agent regret gap equals value gap", {"single-agent-eq"}},
      {8, "value-gap bound does not transfer to regret gap", {"thm1-direction"}},
      {9, "multiple-CE normal-form game", {"nfg"}},
      {10, "regret-difference lemma with bound eps u H", {"lemma1"}},
      {11, "best-response DP matches enumeration", {"br-oracle"}},
      {12, "OCO average regret", {"oco-regret"}},
      {13, "J-IRL value gap bound", {"jirl-ub"}},
  };
  return c;
}

// Pinned tolerances; every criterion is judged against these values.
Tolerances pinned() {
  Tolerances t;
  t.equality = 1e-9;
  t.bound_slack = 1e-6;
  t.occupancy = 1e-12;
  t.single_agent = 1e-8;
  t.best_response = 1e-10;
  t.nfg = 1e-12;
  t.lemma = 1e-9;
  t.ce = 1e-9;
  t.jirl_moment = 0.05;
  t.runtime_ms = 1000.0;
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> known_fail;
  std::vector<int> only;
  std::string report;
  app.add_option("--known-fail", known_fail, "Criteria reported but excluded from the exit status");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--report", report, "Write all suite rows as CSV");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> expected_fail(known_fail.begin(), known_fail.end());
  const std::set<int> selected(only.begin(), only.end());
  SuiteRunner runner(pinned());
  std::vector<ReportRow> rows;
  int unexpected = 0;
  for (const auto& c : criteria()) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    bool pass = true;
    std::string detail;
    for (const auto& name : c.suites) {
      const auto r = runner.run(name);
      pass = pass && r.passed();
      if (!detail.empty()) detail += "; ";
      detail += name + " " + std::to_string(r.rows.size() - r.failures()) + "/" + std::to_string(r.rows.size()) +
                " (" + r.summary + ")";
      rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    }
    const bool excused = !pass && expected_fail.count(c.id);
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << (excused ? " (known)" : "") << " - "
              << c.title << ": " << detail << std::endl;
    if (!pass && !excused) ++unexpected;
  }
  if (!report.empty()) {
    std::ofstream out(report);
    write_report_csv(out, rows);
  }
  return unexpected == 0 ? 0 : 1;
}
