#pragma once

// Run configuration, flash record files and histogram export.
//
// A record file is JSON lines: one header object ("schema", "run_id",
// "params_hash", ...) followed by one object per flash. Histograms are
// tab-separated columns bin_lo, bin_hi, count after '#' metadata lines.

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "grwf/error.hpp"
#include "grwf/events.hpp"
#include "grwf/spacetime.hpp"

namespace grwf::io {

using json = nlohmann::json;

inline constexpr const char* kRecordSchema = "grwf.flash-records/1";
inline constexpr const char* kReportSchema = "grwf.test-reports/1";
inline constexpr const char* kHistogramSchema = "grwf.histogram/1";

inline std::string sha256_hex(const std::string& s, size_t hex_chars = 16) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(s.data(), s.size(), md, &len, EVP_sha256(), nullptr);
  static const char* d = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len && out.size() < hex_chars; ++k) {
    out += d[md[k] >> 4];
    out += d[md[k] & 15];
  }
  return out;
}

// ------------------------------------------------------------------ config

struct PacketSpec {
  double x0 = 0, width = 2, k0 = 0;
};

struct StateTerm {
  double amplitude = 1, phase = 0;
  std::vector<PacketSpec> packets;  // one per particle
};

struct RunConfig {
  std::string model;  // grw-jump | grw-generation | flash | temporal
  double tau = 10, a = 1, L = 64;
  int M = 128;
  std::vector<double> masses;
  double t_max = std::numeric_limits<double>::infinity();    // temporal window
  double horizon = std::numeric_limits<double>::infinity();  // grw-jump window
  int max_flashes = 1000;
  std::vector<StateTerm> terms;
  std::vector<SpacetimePoint> initial_flashes;  // per particle; defaults to (0, x0 of the first term)
  std::uint64_t trajectories = 1;
  int generations = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string records = "flashes.jsonl";

  int particles() const { return static_cast<int>(masses.size()); }
};

namespace detail {

[[noreturn]] inline void config_fail(const YAML::Node& n, const std::string& key, const std::string& msg) {
  std::ostringstream os;
  if (n.IsDefined() && n.Mark().line >= 0) os << "line " << n.Mark().line + 1 << ": ";
  os << "key '" << key << "': " << msg;
  throw SimulationError(ErrorKind::ConfigError, os.str());
}

inline void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
  if (!n.IsMap()) config_fail(n, where, "expected a mapping");
  for (auto it = n.begin(); it != n.end(); ++it) {
    const std::string k = it->first.as<std::string>();
    if (!allowed.count(k)) config_fail(it->first, where.empty() ? k : where + "." + k, "unknown key");
  }
}

template <class T>
T get(const YAML::Node& n, const std::string& key, const std::string& path, T fallback) {
  const YAML::Node v = n[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    config_fail(v, path, "invalid value '" + (v.IsScalar() ? v.Scalar() : std::string("<non-scalar>")) + "'");
  }
}

inline void require(bool ok, const YAML::Node& n, const std::string& key, const std::string& msg) {
  if (!ok) config_fail(n, key, msg);
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root) {
  using namespace detail;
  RunConfig c;
  if (!root || root.IsNull()) throw SimulationError(ErrorKind::ConfigError, "empty configuration");
  check_keys(root, "", {"model", "params", "state", "initial_flashes", "trajectories", "generations", "seed", "output"});
  const YAML::Node m = root["model"];
  require(m.IsDefined(), root, "model", "missing");
  c.model = get<std::string>(root, "model", "model", "");
  require(c.model == "grw-jump" || c.model == "grw-generation" || c.model == "flash" || c.model == "temporal", m,
          "model", "must be one of grw-jump, grw-generation, flash, temporal");

  const YAML::Node p = root["params"];
  require(p.IsDefined(), root, "params", "missing");
  check_keys(p, "params", {"tau", "a", "mass", "masses", "L", "M", "t_max", "horizon", "max_flashes"});
  c.tau = get<double>(p, "tau", "params.tau", c.tau);
  c.a = get<double>(p, "a", "params.a", c.a);
  c.L = get<double>(p, "L", "params.L", c.L);
  c.M = get<int>(p, "M", "params.M", c.M);
  c.t_max = get<double>(p, "t_max", "params.t_max", c.t_max);
  c.horizon = get<double>(p, "horizon", "params.horizon", c.horizon);
  c.max_flashes = get<int>(p, "max_flashes", "params.max_flashes", c.max_flashes);
  require(c.tau > 0 && std::isfinite(c.tau), p["tau"], "params.tau", "must be positive");
  require(c.a > 0 && std::isfinite(c.a), p["a"], "params.a", "must be positive");
  require(c.L > 0 && std::isfinite(c.L), p["L"], "params.L", "must be positive");
  require(c.M >= 8 && (c.M & (c.M - 1)) == 0, p["M"], "params.M", "must be a power of two >= 8");
  require(c.t_max > 0, p["t_max"], "params.t_max", "must be positive");
  require(c.horizon > 0, p["horizon"], "params.horizon", "must be positive");
  require(c.max_flashes > 0, p["max_flashes"], "params.max_flashes", "must be positive");
  require(!(p["mass"] && p["masses"]), p, "params", "give either mass or masses");

  const YAML::Node s = root["state"];
  require(s.IsDefined(), root, "state", "missing");
  check_keys(s, "state", {"terms"});
  const YAML::Node terms = s["terms"];
  require(terms.IsSequence() && terms.size() > 0, terms.IsDefined() ? terms : s, "state.terms",
          "must be a non-empty list");
  for (size_t k = 0; k < terms.size(); ++k) {
    const std::string path = "state.terms[" + std::to_string(k) + "]";
    const YAML::Node t = terms[k];
    check_keys(t, path, {"amplitude", "phase", "packets"});
    StateTerm st;
    st.amplitude = get<double>(t, "amplitude", path + ".amplitude", 1.0);
    st.phase = get<double>(t, "phase", path + ".phase", 0.0);
    const YAML::Node pk = t["packets"];
    require(pk.IsSequence() && pk.size() > 0, pk.IsDefined() ? pk : t, path + ".packets", "must be a non-empty list");
    for (size_t q = 0; q < pk.size(); ++q) {
      const std::string pp = path + ".packets[" + std::to_string(q) + "]";
      check_keys(pk[q], pp, {"x0", "width", "k0"});
      PacketSpec ps;
      ps.x0 = get<double>(pk[q], "x0", pp + ".x0", 0.0);
      ps.width = get<double>(pk[q], "width", pp + ".width", 2.0);
      ps.k0 = get<double>(pk[q], "k0", pp + ".k0", 0.0);
      require(ps.width > 0, pk[q]["width"], pp + ".width", "must be positive");
      require(std::abs(ps.x0) <= 0.5 * c.L, pk[q]["x0"], pp + ".x0", "outside the box");
      st.packets.push_back(ps);
    }
    if (!c.terms.empty())
      require(st.packets.size() == c.terms[0].packets.size(), pk, path + ".packets",
              "every term needs one packet per particle");
    c.terms.push_back(st);
  }
  const int N = static_cast<int>(c.terms[0].packets.size());
  if (p["masses"]) {
    require(p["masses"].IsSequence(), p["masses"], "params.masses", "must be a list");
    c.masses = get<std::vector<double>>(p, "masses", "params.masses", {});
    require(static_cast<int>(c.masses.size()) == N, p["masses"], "params.masses", "one mass per particle");
  } else {
    c.masses.assign(N, get<double>(p, "mass", "params.mass", 5.0));
  }
  for (double v : c.masses) require(v > 0 && std::isfinite(v), p, "params.mass", "masses must be positive");

  const YAML::Node f = root["initial_flashes"];
  if (f) {
    require(f.IsSequence() && static_cast<int>(f.size()) == N, f, "initial_flashes", "one {t, x} per particle");
    for (size_t k = 0; k < f.size(); ++k) {
      const std::string path = "initial_flashes[" + std::to_string(k) + "]";
      check_keys(f[k], path, {"t", "x"});
      c.initial_flashes.push_back(point(get<double>(f[k], "t", path + ".t", 0.0), get<double>(f[k], "x", path + ".x", 0.0)));
    }
    for (auto& x : c.initial_flashes) require(x.t <= 0, f, "initial_flashes", "flashes must not lie after t = 0");
  } else {
    for (int i = 0; i < N; ++i) c.initial_flashes.push_back(point(0.0, c.terms[0].packets[i].x0));
  }
  const YAML::Node tr = root["trajectories"];
  if (tr) {
    const long long v = get<long long>(root, "trajectories", "trajectories", 1);
    require(v >= 0, tr, "trajectories", "must be >= 0");
    c.trajectories = static_cast<std::uint64_t>(v);
  }
  c.generations = get<int>(root, "generations", "generations", 1);
  require(c.generations >= 1, root["generations"], "generations", "must be >= 1");
  c.seed = get<std::uint64_t>(root, "seed", "seed", 1);
  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"dir", "records"});
    c.out_dir = get<std::string>(o, "dir", "output.dir", c.out_dir);
    c.records = get<std::string>(o, "records", "output.records", c.records);
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw SimulationError(ErrorKind::ConfigError, "cannot read " + path);
  } catch (const YAML::ParserException& e) {
    throw SimulationError(ErrorKind::ConfigError, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_config(root);
}

inline RunConfig parse_config_string(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::ParserException& e) {
    throw SimulationError(ErrorKind::ConfigError, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

// everything that determines the flash distribution; seed, counts and paths excluded
inline json params_json(const RunConfig& c) {
  json terms = json::array();
  for (auto& t : c.terms) {
    json pk = json::array();
    for (auto& p : t.packets) pk.push_back({{"x0", p.x0}, {"width", p.width}, {"k0", p.k0}});
    terms.push_back({{"amplitude", t.amplitude}, {"phase", t.phase}, {"packets", pk}});
  }
  json init = json::array();
  for (auto& x : c.initial_flashes) init.push_back({{"t", x.t}, {"x", x.x[0]}});
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  return json{{"model", c.model},     {"tau", c.tau},           {"a", c.a},
              {"L", c.L},             {"M", c.M},               {"masses", c.masses},
              {"t_max", num(c.t_max)}, {"horizon", num(c.horizon)}, {"max_flashes", c.max_flashes},
              {"generations", c.generations}, {"terms", terms}, {"initial_flashes", init}};
}

inline std::string params_hash(const json& params) { return sha256_hex(params.dump()); }
inline std::string params_hash(const RunConfig& c) { return params_hash(params_json(c)); }

inline std::string run_id(const std::string& hash, std::uint64_t seed) {
  return sha256_hex(hash + ":" + std::to_string(seed), 12);
}

// ----------------------------------------------------------------- records

struct RecordHeader {
  std::string run_id, params_hash, model;
  std::uint64_t seed = 0, trajectories = 0;
  int labels = 0;
  json params = json::object();
};

struct FlashRecord {
  std::string run_id;
  std::uint64_t trajectory = 0;
  int label = 0, generation = 0;
  double t = 0, x = 0, dT = 0;
  json diagnostics = nullptr;
};

inline json to_json(const RecordHeader& h) {
  return json{{"schema", kRecordSchema}, {"run_id", h.run_id},   {"params_hash", h.params_hash},
              {"model", h.model},        {"seed", h.seed},       {"trajectories", h.trajectories},
              {"labels", h.labels},      {"params", h.params}};
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const FlashRecord& r) {
  return json{{"run_id", r.run_id}, {"trajectory", r.trajectory}, {"label", r.label}, {"generation", r.generation},
              {"t", r.t},           {"x", r.x},                   {"dT", finite_or_null(r.dT)},
              {"diagnostics", r.diagnostics}};
}

inline json to_json(const CollapseDiagnostics& d) {
  return json{{"density_mass", d.density_mass},
              {"norm_deficit", d.norm_deficit},
              {"truncation", d.truncation},
              {"extension_correction", d.extension_correction},
              {"surface_norm_error", d.surface_norm_error},
              {"pair_probability", d.pair_probability},
              {"box_warning", d.box_warning}};
}

inline std::vector<FlashRecord> records_of(const FlashHistory& h, const std::string& run_id) {
  std::vector<FlashRecord> out;
  for (int i = 0; i < h.labels(); ++i)
    for (const auto& e : h.flashes[i]) {
      FlashRecord r;
      r.run_id = run_id;
      r.trajectory = h.trajectory;
      r.label = i;
      r.generation = e.generation;
      r.t = e.point.t;
      r.x = e.point.x[0];
      r.dT = e.wait;
      for (const auto& d : h.diagnostics)
        if (d.label == i && d.generation == e.generation) r.diagnostics = to_json(d);
      out.push_back(std::move(r));
    }
  return out;
}

class RecordWriter {
 public:
  RecordWriter(const std::string& path, const RecordHeader& h) : out_(path, std::ios::binary), run_id_(h.run_id) {
    if (!out_) throw SimulationError(ErrorKind::ConfigError, "cannot write " + path);
    out_ << to_json(h).dump() << '\n';
  }
  void write(const FlashRecord& r) { out_ << to_json(r).dump() << '\n'; }
  void write(const FlashHistory& h) {
    for (const auto& r : records_of(h, run_id_)) write(r);
  }
  void close() { out_.close(); }

 private:
  std::ofstream out_;
  std::string run_id_;
};

struct RecordFile {
  bool has_header = false;
  RecordHeader header;
  std::vector<FlashRecord> rows;
};

namespace detail {
[[noreturn]] inline void schema_fail(const std::string& path, size_t line, const std::string& msg) {
  throw SimulationError(ErrorKind::SchemaMismatch, path + ":" + std::to_string(line) + ": " + msg);
}

inline double number_field(const json& j, const char* key, const std::string& path, size_t line, bool nullable = false) {
  if (!j.contains(key)) schema_fail(path, line, std::string("missing field '") + key + "'");
  const json& v = j[key];
  if (nullable && v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) schema_fail(path, line, std::string("field '") + key + "' is not a number");
  return v.get<double>();
}
}  // namespace detail

// An empty file has neither header nor rows.
inline RecordFile read_records(const std::string& path) {
  using detail::schema_fail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimulationError(ErrorKind::SchemaMismatch, "cannot read " + path);
  RecordFile f;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      schema_fail(path, n, "not a JSON object");
    }
    if (!j.is_object()) schema_fail(path, n, "not a JSON object");
    if (!f.has_header) {
      if (j.value("schema", std::string()) != kRecordSchema) schema_fail(path, n, "missing or unknown record schema");
      try {
        f.header.run_id = j.at("run_id").get<std::string>();
        f.header.params_hash = j.at("params_hash").get<std::string>();
        f.header.model = j.at("model").get<std::string>();
        f.header.seed = j.at("seed").get<std::uint64_t>();
        f.header.trajectories = j.at("trajectories").get<std::uint64_t>();
        f.header.labels = j.at("labels").get<int>();
        f.header.params = j.at("params");
      } catch (const json::exception& e) {
        schema_fail(path, n, std::string("bad header: ") + e.what());
      }
      f.has_header = true;
      continue;
    }
    if (j.contains("schema")) schema_fail(path, n, "second header");
    FlashRecord r;
    if (!j.contains("run_id") || !j["run_id"].is_string()) schema_fail(path, n, "missing field 'run_id'");
    r.run_id = j["run_id"].get<std::string>();
    if (r.run_id != f.header.run_id) schema_fail(path, n, "record from another run");
    r.trajectory = static_cast<std::uint64_t>(detail::number_field(j, "trajectory", path, n));
    r.label = static_cast<int>(detail::number_field(j, "label", path, n));
    r.generation = static_cast<int>(detail::number_field(j, "generation", path, n));
    r.t = detail::number_field(j, "t", path, n);
    r.x = detail::number_field(j, "x", path, n);
    r.dT = detail::number_field(j, "dT", path, n, true);
    if (r.label < 0 || r.label >= f.header.labels) schema_fail(path, n, "label out of range");
    r.diagnostics = j.value("diagnostics", json(nullptr));
    f.rows.push_back(std::move(r));
  }
  return f;
}

// ------------------------------------------------------------- histograms

struct Histogram {
  std::string observable, params_hash;
  std::vector<double> edges;  // bins + 1
  std::vector<std::uint64_t> counts;
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

inline double observable_of(const FlashRecord& r, const std::string& obs) {
  if (obs == "t") return r.t;
  if (obs == "x") return r.x;
  if (obs == "dT") return r.dT;
  throw SimulationError(ErrorKind::ConfigError, "unknown observable '" + obs + "' (t, x, dT)");
}

struct HistogramSpec {
  std::string observable = "dT";
  int bins = 40;
  double lo = std::numeric_limits<double>::quiet_NaN(), hi = std::numeric_limits<double>::quiet_NaN();
  int label = -1;  // -1 for all labels
};

// Files must share one params hash; rows with a missing observable are skipped.
// Values outside an explicit range are dropped; the default range spans the data.
inline Histogram make_histogram(const std::vector<RecordFile>& files, const HistogramSpec& s) {
  if (s.bins < 1) throw SimulationError(ErrorKind::ConfigError, "bins must be >= 1");
  Histogram h;
  h.observable = s.observable;
  for (const auto& f : files) {
    if (!f.has_header) continue;
    if (h.params_hash.empty()) h.params_hash = f.header.params_hash;
    if (f.header.params_hash != h.params_hash)
      throw SimulationError(ErrorKind::SchemaMismatch,
                            "records from different parameter sets: " + h.params_hash + " vs " + f.header.params_hash);
  }
  std::vector<double> v;
  for (const auto& f : files)
    for (const auto& r : f.rows) {
      if (s.label >= 0 && r.label != s.label) continue;
      const double x = observable_of(r, s.observable);
      if (std::isfinite(x)) v.push_back(x);
    }
  double lo = s.lo, hi = s.hi;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    double dlo = 0, dhi = 1;
    if (!v.empty()) {
      dlo = *std::min_element(v.begin(), v.end());
      dhi = *std::max_element(v.begin(), v.end());
      if (!(dhi > dlo)) dhi = dlo + 1;
    }
    if (!std::isfinite(lo)) lo = dlo;
    if (!std::isfinite(hi)) hi = dhi;
  }
  if (!(hi > lo)) throw SimulationError(ErrorKind::ConfigError, "histogram range is empty");
  h.edges.resize(s.bins + 1);
  for (int k = 0; k <= s.bins; ++k) h.edges[k] = lo + (hi - lo) * k / s.bins;
  h.edges.back() = hi;
  h.counts.assign(s.bins, 0);
  for (double x : v) {
    if (x < lo || x > hi) continue;
    const int k = std::min(s.bins - 1, static_cast<int>((x - lo) / (hi - lo) * s.bins));
    ++h.counts[k];
  }
  return h;
}

inline void write_histogram(const std::string& path, const Histogram& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimulationError(ErrorKind::ConfigError, "cannot write " + path);
  out << "# schema " << kHistogramSchema << "\n";
  out << "# observable " << h.observable << "\n";
  out << "# params_hash " << (h.params_hash.empty() ? "none" : h.params_hash) << "\n";
  out << "bin_lo\tbin_hi\tcount\n";
  char buf[96];
  for (size_t k = 0; k < h.counts.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t%llu\n", h.edges[k], h.edges[k + 1],
                  static_cast<unsigned long long>(h.counts[k]));
    out << buf;
  }
}

inline Histogram read_histogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimulationError(ErrorKind::SchemaMismatch, "cannot read " + path);
  Histogram h;
  std::string line;
  size_t n = 0;
  bool schema = false, columns = false;
  auto fail = [&](const std::string& m) {
    throw SimulationError(ErrorKind::SchemaMismatch, path + ":" + std::to_string(n) + ": " + m);
  };
  while (std::getline(in, line)) {
    ++n;
    if (line.rfind("# ", 0) == 0) {
      std::istringstream ss(line.substr(2));
      std::string key, val;
      ss >> key >> val;
      if (key == "schema") {
        if (val != kHistogramSchema) fail("unknown histogram schema");
        schema = true;
      } else if (key == "observable") {
        h.observable = val;
      } else if (key == "params_hash") {
        h.params_hash = val == "none" ? "" : val;
      }
      continue;
    }
    if (!schema) fail("missing schema line");
    if (!columns) {
      if (line != "bin_lo\tbin_hi\tcount") fail("unexpected columns");
      columns = true;
      continue;
    }
    std::istringstream ss(line);
    double lo, hi;
    unsigned long long c;
    if (!(ss >> lo >> hi >> c)) fail("bad row");
    if (h.edges.empty()) h.edges.push_back(lo);
    else if (lo != h.edges.back()) fail("bins are not contiguous");
    h.edges.push_back(hi);
    h.counts.push_back(c);
  }
  if (!columns) fail("missing column header");
  return h;
}

// -------------------------------------------------------------- reports

// verify settings; every acceptance setup derives its parameters from these
struct VerifyConfig {
  std::uint64_t samples = 10000;
  double alpha = 0.01;
  std::uint64_t seed = 20240611;
};

inline VerifyConfig parse_verify_config(const YAML::Node& root) {
  using namespace detail;
  VerifyConfig v;
  if (!root || root.IsNull()) return v;
  check_keys(root, "", {"samples", "alpha", "seed"});
  const long long n = get<long long>(root, "samples", "samples", static_cast<long long>(v.samples));
  require(n >= 100, root["samples"], "samples", "must be >= 100");
  v.samples = static_cast<std::uint64_t>(n);
  v.alpha = get<double>(root, "alpha", "alpha", v.alpha);
  require(v.alpha > 0 && v.alpha < 1, root["alpha"], "alpha", "must lie in (0, 1)");
  v.seed = get<std::uint64_t>(root, "seed", "seed", v.seed);
  return v;
}

inline VerifyConfig load_verify_config(const std::string& path) {
  try {
    return parse_verify_config(YAML::LoadFile(path));
  } catch (const YAML::BadFile&) {
    throw SimulationError(ErrorKind::ConfigError, "cannot read " + path);
  } catch (const YAML::ParserException& e) {
    throw SimulationError(ErrorKind::ConfigError, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

inline json to_json(const VerifyConfig& v) { return json{{"samples", v.samples}, {"alpha", v.alpha}}; }

inline std::string report_header(const json& config, std::uint64_t seed, const std::string& suite) {
  const std::string hash = params_hash(config);
  return json{{"schema", kReportSchema}, {"params_hash", hash}, {"seed", seed}, {"suite", suite}, {"config", config}}
      .dump();
}

}  // namespace grwf::io
