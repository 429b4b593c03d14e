// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// usage: acceptance [--only 1,3,7] [--samples N] [--seed S] [--workers W] [--report FILE] [--verbose]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "grwf/suites.hpp"

int main(int argc, char** argv) {
  grwf::SuiteOptions o;
  o.workers = grwf::default_workers();
  std::set<int> only;
  std::string report;
  bool verbose = false;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    auto next = [&]() -> std::string {
      if (k + 1 >= argc) {
        std::cerr << "missing value for " << a << "\n";
        std::exit(2);
      }
      return argv[++k];
    };
    if (a == "--only") {
      std::stringstream ss(next());
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else if (a == "--samples") {
      o.samples = std::stoul(next());
    } else if (a == "--seed") {
      o.seed = std::stoull(next());
    } else if (a == "--workers") {
      o.workers = std::stoi(next());
    } else if (a == "--report") {
      report = next();
    } else if (a == "--verbose") {
      verbose = true;
    } else {
      std::cerr << "unknown argument " << a << "\n";
      return 2;
    }
  }
  std::ofstream rep;
  if (!report.empty()) rep.open(report);
  bool ok = true;
  for (const auto& c : grwf::criteria()) {
    if (!only.empty() && !only.count(c.id)) continue;
    const grwf::CriterionResult r = grwf::run_criterion(c, o);
    ok = ok && r.pass();
    std::printf("criterion %2d %-32s %s  (%.0f s)\n", r.id, r.title.c_str(), r.pass() ? "PASS" : "FAIL", r.seconds);
    if (r.budget_s > 0)
      std::printf("    %s wall-clock %.0f s, limit %.0f s\n", r.in_budget() ? "ok  " : "FAIL", r.seconds, r.budget_s);
    for (const auto& t : r.reports) {
      if (verbose || (t.asserted && !t.pass))
        std::printf("    %s %s: %s = %.6g, p = %.4g  %s\n", t.asserted ? (t.pass ? "ok  " : "FAIL") : "info",
                    t.name.c_str(), t.statistic_name.c_str(), t.statistic, t.p_value, t.note.c_str());
      if (rep) {
        auto j = grwf::to_json(t);
        j["criterion"] = r.id;
        rep << j.dump() << "\n";
      }
    }
    std::fflush(stdout);
  }
  return ok ? 0 : 1;
}
