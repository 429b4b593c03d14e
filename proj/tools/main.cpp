// grwf: simulate flash processes, run the verification suites, export histograms.
//
// exit codes: 0 success, 1 test failure, 2 config error, 3 runtime error

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "grwf/io.hpp"
#include "grwf/run.hpp"
#include "grwf/suites.hpp"

namespace fs = std::filesystem;
using namespace grwf;

namespace {

enum Exit { kOk = 0, kTestFailure = 1, kConfigError = 2, kRuntimeError = 3 };

void ensure_dir(const std::string& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw SimulationError(ErrorKind::ConfigError, "cannot create " + d + ": " + ec.message());
}

struct Common {
  std::string config, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

int run_simulate(const Common& o) {
  io::RunConfig c = io::load_config(o.config);
  const std::uint64_t seed = o.seed_set ? o.seed : c.seed;
  const std::string dir = o.out.empty() ? c.out_dir : o.out;
  const int workers = o.workers > 0 ? o.workers : default_workers();
  ensure_dir(dir);
  const auto hs = simulate(c, seed, workers);
  const io::RecordHeader h = record_header(c, seed);
  const std::string path = (fs::path(dir) / c.records).string();
  io::RecordWriter w(path, h);
  size_t n = 0;
  for (const auto& x : hs) {
    w.write(x);
    n += x.count();
  }
  w.close();
  std::printf("%s: %zu trajectories, %zu flashes, params %s\n", path.c_str(), hs.size(), n, h.params_hash.c_str());
  return kOk;
}

int run_verify(const Common& o, const std::string& suite) {
  if (!valid_suite(suite))
    throw SimulationError(ErrorKind::ConfigError,
                          "key 'suite': unknown suite '" + suite + "' (povm, equivalence, covariance, limits, signaling, all)");
  io::VerifyConfig v = o.config.empty() ? io::VerifyConfig{} : io::load_verify_config(o.config);
  if (o.seed_set) v.seed = o.seed;
  SuiteOptions so;
  so.seed = v.seed;
  so.samples = v.samples;
  so.alpha = v.alpha;
  so.workers = o.workers > 0 ? o.workers : default_workers();
  const std::string dir = o.out.empty() ? "out" : o.out;
  ensure_dir(dir);
  const std::string path = (fs::path(dir) / ("reports-" + suite + ".jsonl")).string();
  std::ofstream rep(path, std::ios::binary);
  if (!rep) throw SimulationError(ErrorKind::ConfigError, "cannot write " + path);
  const io::json cfg = io::to_json(v);
  const std::string hash = io::params_hash(cfg);
  rep << io::report_header(cfg, v.seed, suite) << '\n';
  bool ok = true;
  for (const auto& c : criteria()) {
    if (suite != "all" && c.suite != suite) continue;
    const CriterionResult r = run_criterion(c, so);
    ok = ok && r.pass();
    std::printf("criterion %2d %-32s %s  (%.0f s)\n", r.id, r.title.c_str(), r.pass() ? "PASS" : "FAIL", r.seconds);
    if (!r.in_budget()) std::printf("    FAIL wall-clock %.0f s over the %.0f s limit\n", r.seconds, r.budget_s);
    for (const auto& t : r.reports) {
      if (t.asserted && !t.pass) std::printf("    FAIL %s: %s = %g  %s\n", t.name.c_str(), t.statistic_name.c_str(), t.statistic, t.note.c_str());
      io::json j = to_json(t);
      j["criterion"] = r.id;
      j["params_hash"] = hash;
      rep << j.dump() << '\n';
    }
    std::fflush(stdout);
  }
  std::printf("%s: %s\n", path.c_str(), ok ? "all asserted tests passed" : "asserted failures");
  return ok ? kOk : kTestFailure;
}

int run_export(const Common& o, const std::vector<std::string>& inputs, const io::HistogramSpec& spec) {
  std::vector<io::RecordFile> files;
  for (const auto& p : inputs) files.push_back(io::read_records(p));
  const io::Histogram h = io::make_histogram(files, spec);
  const std::string dir = o.out.empty() ? "." : o.out;
  ensure_dir(dir);
  const std::string path = (fs::path(dir) / ("hist_" + spec.observable + ".tsv")).string();
  io::write_histogram(path, h);
  std::printf("%s: %zu bins, %llu counts\n", path.c_str(), h.counts.size(), static_cast<unsigned long long>(h.total()));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRW and relativistic flash-process simulator"};
  app.require_subcommand(1);
  Common o;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "master seed (overrides the config)")->each([&](const std::string&) { o.seed_set = true; });
    s->add_option("--workers", o.workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    s->add_option("--out", o.out, "output directory");
  };
  auto* sim = app.add_subcommand("simulate", "run trajectories and write flash records");
  sim->add_option("--config", o.config, "run configuration (YAML)")->required();
  add_common(sim);

  std::string suite = "all";
  auto* ver = app.add_subcommand("verify", "run verification suites and write test reports");
  ver->add_option("--suite", suite, "povm|equivalence|covariance|limits|signaling|all");
  ver->add_option("--config", o.config, "verify settings (YAML: samples, alpha, seed)");
  add_common(ver);

  std::vector<std::string> inputs;
  io::HistogramSpec spec;
  std::vector<double> range;
  auto* ex = app.add_subcommand("export-histograms", "bin a flash record column into a TSV histogram");
  ex->add_option("records", inputs, "flash record files (one parameter set)")->required();
  ex->add_option("--observable", spec.observable, "t, x or dT");
  ex->add_option("--bins", spec.bins, "number of bins")->check(CLI::PositiveNumber);
  ex->add_option("--range", range, "lower and upper edge")->expected(2);
  ex->add_option("--label", spec.label, "only this particle label");
  ex->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (range.size() == 2) {
    spec.lo = range[0];
    spec.hi = range[1];
  }
  try {
    if (*sim) return run_simulate(o);
    if (*ver) return run_verify(o, suite);
    return run_export(o, inputs, spec);
  } catch (const SimulationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::ConfigError ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
}
