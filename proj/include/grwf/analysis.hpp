#pragma once

// Statistical test harness and the physics-level experiments built on it.
// Every experiment is deterministic given DeskParams::seed; trajectory k of a
// sample uses the streams (seed, k), so the worker count does not matter.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "grwf/flash.hpp"
#include "grwf/grw.hpp"
#include "grwf/parallel.hpp"
#include "grwf/povm.hpp"
#include "grwf/schrodinger.hpp"
#include "grwf/stats.hpp"

namespace grwf {

using json = nlohmann::json;

struct TestReport {
  std::string name;
  std::string statistic_name;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();    // statistical checks
  double tolerance = std::numeric_limits<double>::quiet_NaN();  // deterministic checks: statistic <= tolerance
  bool pass = false;
  bool asserted = true;  // unasserted reports are exploratory and never fail a suite
  std::vector<size_t> samples;
  json config = json::object();
  std::string note;
};

inline json to_json(const TestReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"name", r.name},         {"statistic_name", r.statistic_name}, {"statistic", num(r.statistic)},
              {"p_value", num(r.p_value)}, {"tolerance", num(r.tolerance)},  {"pass", r.pass},
              {"asserted", r.asserted}, {"samples", r.samples},             {"config", r.config},
              {"note", r.note}};
}

inline bool all_pass(const std::vector<TestReport>& rs) {
  for (const auto& r : rs)
    if (r.asserted && !r.pass) return false;
  return true;
}

inline TestReport tolerance_report(std::string name, std::string what, double value, double tol) {
  TestReport r;
  r.name = std::move(name);
  r.statistic_name = std::move(what);
  r.statistic = value;
  r.tolerance = tol;
  r.pass = value <= tol;
  return r;
}

// ---------------------------------------------------------------- comparisons

enum class Method { KS, Chi2 };

// Freedman-Diaconis edges on the pooled sample, with open outer bins
inline std::vector<double> freedman_diaconis_edges(std::vector<double> v, int max_bins = 50) {
  std::sort(v.begin(), v.end());
  auto q = [&](double p) { return v[std::min(v.size() - 1, static_cast<size_t>(p * v.size()))]; };
  const double iqr = q(0.75) - q(0.25);
  const double lo = q(0.005), hi = q(0.995);
  if (!(iqr > 0) || !(hi > lo)) return {lo};
  const double h = 2 * iqr / std::cbrt(static_cast<double>(v.size()));
  const int n = std::clamp(static_cast<int>(std::ceil((hi - lo) / h)), 1, max_bins);
  std::vector<double> e;
  for (int k = 0; k <= n; ++k) e.push_back(lo + (hi - lo) * k / n);
  return e;
}

// chi-squared homogeneity test of two samples on given interior edges
inline TestStatistic chi2_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                     const std::vector<double>& edges) {
  require_samples(a.size(), "chi-squared test");
  require_samples(b.size(), "chi-squared test");
  const size_t B = edges.size() + 1;
  std::vector<double> ca(B, 0), cb(B, 0);
  for (double v : a) ca[bin_of(edges, v)] += 1;
  for (double v : b) cb[bin_of(edges, v)] += 1;
  const double na = a.size(), nb = b.size();
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double x2 = 0;
  int used = 0;
  for (size_t k = 0; k < B; ++k) {
    if (ca[k] + cb[k] == 0) continue;
    ++used;
    const double d = ka * ca[k] - kb * cb[k];
    x2 += d * d / (ca[k] + cb[k]);
  }
  return {x2, used > 1 ? chi2_sf(x2, used - 1) : 1.0, a.size(), b.size()};
}

inline TestReport compare_distributions(std::string name, const std::vector<double>& a, const std::vector<double>& b,
                                        Method m = Method::KS, double alpha = 0.01,
                                        std::vector<double> edges = {}) {
  TestReport r;
  r.name = std::move(name);
  TestStatistic s;
  if (m == Method::KS) {
    r.statistic_name = "KS D";
    s = ks_two_sample(a, b);
  } else {
    r.statistic_name = "chi2";
    if (edges.empty()) {
      std::vector<double> pool = a;
      pool.insert(pool.end(), b.begin(), b.end());
      edges = freedman_diaconis_edges(pool);
    }
    s = chi2_two_sample(a, b, edges);
  }
  r.statistic = s.statistic;
  r.p_value = s.p_value;
  r.pass = s.p_value > alpha;
  r.samples = {a.size(), b.size()};
  r.config["alpha"] = alpha;
  return r;
}

// one sample against an exact distribution function
inline TestReport compare_to_cdf(std::string name, const std::vector<double>& a,
                                 const std::function<double(double)>& cdf, double alpha = 0.01) {
  TestReport r;
  r.name = std::move(name);
  r.statistic_name = "KS D";
  const TestStatistic s = ks_one_sample(a, cdf);
  r.statistic = s.statistic;
  r.p_value = s.p_value;
  r.pass = s.p_value > alpha;
  r.samples = {a.size()};
  r.config["alpha"] = alpha;
  return r;
}

// binned counts against exact bin probabilities
inline TestReport compare_to_probabilities(std::string name, const std::vector<double>& counts,
                                           const std::vector<double>& probs, double alpha = 0.01) {
  TestReport r;
  r.name = std::move(name);
  r.statistic_name = "chi2";
  const TestStatistic s = chi2_goodness_of_fit(counts, probs);
  r.statistic = s.statistic;
  r.p_value = s.p_value;
  r.pass = s.p_value > alpha;
  r.samples = {s.n1};
  r.config["alpha"] = alpha;
  r.config["bins"] = counts.size();
  return r;
}

// --------------------------------------------------------------- sample sets

// Toy natural units: c = hbar = 1, lengths in units of a.
struct DeskParams {
  double tau = 10, a = 1, mass = 5, L = 64, width = 2;
  int M = 128;
  size_t samples = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  double alpha = 0.01;
};

inline json to_json(const DeskParams& p) {
  return json{{"tau", p.tau},         {"a", p.a},         {"mass", p.mass}, {"L", p.L},
              {"width", p.width},     {"M", p.M},         {"samples", p.samples},
              {"seed", p.seed},       {"alpha", p.alpha}};
}

// per-label flash coordinates of a set of trajectories
struct SampleSet {
  std::string model;
  std::uint64_t seed = 0;
  std::string params_hash;
  std::vector<std::vector<double>> t, x, wait, chi;

  explicit SampleSet(int labels = 0) : t(labels), x(labels), wait(labels), chi(labels) {}
  int labels() const { return static_cast<int>(t.size()); }
  size_t size(int i = 0) const { return t.at(i).size(); }
  void add(const FlashEvent& e) {
    t.at(e.label).push_back(e.point.t);
    x.at(e.label).push_back(e.point.x[0]);
    wait.at(e.label).push_back(e.wait);
    chi.at(e.label).push_back(e.chi);
  }
};

inline SpinorField dirac_packet(GridPtr g, double mass, double x0, double width, double k0 = 0.0) {
  return normalized(positive_energy_project(gaussian_spinor(g, 0.0, x0, width, k0), mass));
}

// first flashes of the given labels (all Sample, no collapse) from n trajectories
inline SampleSet first_flashes(const FlashModel& m, const MultiTimeState<SpinorField>& psi,
                               const std::vector<SpacetimePoint>& X, size_t n, std::uint64_t seed, int workers,
                               GenerationPlan plan = {}) {
  plan.collapse = false;
  auto gens = parallel_map<std::vector<FlashEvent>>(n, workers, [&](size_t k) {
    auto rs = TrajectoryStreams::make(seed, k);
    return m.sample_generation(psi, X, rs, plan).flashes;
  });
  SampleSet s(m.labels());
  s.model = "flash";
  s.seed = seed;
  for (auto& g : gens)
    for (auto& e : g) s.add(e);
  return s;
}

inline double wrap_box(double x, double L) { return x - L * std::floor(x / L + 0.5); }

// --------------------------------------------------------------- experiments

// boost(flashes of run(psi0, X0)) against flashes of run(boosted psi0, boosted X0)
inline std::vector<TestReport> covariance_test(const DeskParams& p, double eta) {
  auto g = make_grid(p.L, p.M);
  const FlashModel m({DiracParticle(p.mass)}, p.tau, p.a);
  const SpinorField f = dirac_packet(g, p.mass, 0, p.width);
  const SpacetimePoint X0 = point(0, 0);
  const auto psi = MultiTimeState<SpinorField>::product({f});
  const auto psib = MultiTimeState<SpinorField>::product({boost_free_state(f, p.mass, eta)});
  const SampleSet a = first_flashes(m, psi, {X0}, p.samples, p.seed, p.workers);
  const SampleSet b = first_flashes(m, psib, {boost(X0, eta)}, p.samples, p.seed + 1, p.workers);
  std::vector<double> ta, xa;
  for (size_t k = 0; k < a.size(); ++k) {
    const SpacetimePoint y = boost(point(a.t[0][k], a.x[0][k]), eta);
    ta.push_back(y.t);
    xa.push_back(y.x[0]);
  }
  json cfg = to_json(p);
  cfg["eta"] = eta;
  std::vector<TestReport> out{compare_distributions("boosted first-flash t", ta, b.t[0], Method::KS, p.alpha),
                              compare_distributions("boosted first-flash x", xa, b.x[0], Method::KS, p.alpha)};
  for (auto& r : out) r.config = cfg;
  return out;
}

// zero rapidity with a shared seed: both routes give the same histories
inline TestReport covariance_identity_check(const DeskParams& p, size_t n = 200) {
  auto g = make_grid(p.L, p.M);
  const FlashModel m({DiracParticle(p.mass)}, p.tau, p.a);
  const SpinorField f = dirac_packet(g, p.mass, 0, p.width);
  const auto psi = MultiTimeState<SpinorField>::product({f});
  const auto psib = MultiTimeState<SpinorField>::product({boost_free_state(f, p.mass, 0.0)});
  const SampleSet a = first_flashes(m, psi, {point(0, 0)}, n, p.seed, p.workers);
  const SampleSet b = first_flashes(m, psib, {point(0, 0)}, n, p.seed, p.workers);
  double d = 0;
  for (size_t k = 0; k < n; ++k)
    d = std::max({d, std::abs(a.t[0][k] - b.t[0][k]), std::abs(a.x[0][k] - b.x[0][k])});
  TestReport r = tolerance_report("zero boost, shared seed: max flash difference", "max |dy|", d, 1e-9);
  r.samples = {n};
  r.config = to_json(p);
  return r;
}

// Slow packets against the GRW generation construction with the same
// parameters (Schroedinger particle of the same mass, same initial profile).
inline std::vector<TestReport> low_velocity_test(const DeskParams& p, double v = 0.0, bool asserted = true) {
  auto g = make_grid(p.L, p.M);
  const double eta = rapidity_from_velocity(v), gam = std::cosh(eta);
  const FlashModel m({DiracParticle(p.mass)}, p.tau, p.a);
  SpinorField f = dirac_packet(g, p.mass, 0, p.width);
  if (v != 0) f = boost_free_state(f, p.mass, eta);
  const SampleSet rel = first_flashes(m, MultiTimeState<SpinorField>::product({f}), {point(0, 0)}, p.samples,
                                      p.seed, p.workers);
  // boosted width and momentum of the same packet
  const ScalarField s = gaussian_scalar(g, 0, 0, p.width / gam, p.mass * std::sinh(eta));
  const GrwModel<SchrodingerParticle> grw({SchrodingerParticle(p.mass)}, p.tau, p.a);
  const auto psi_s = MultiTimeState<ScalarField>::product({s});
  typename GrwModel<SchrodingerParticle>::RunOptions ro;
  ro.mode = GrwMode::Generation;
  ro.generations = 1;
  auto hs = parallel_map<FlashEvent>(p.samples, p.workers, [&](size_t k) {
    return grw.run(psi_s, 0.0, ro, p.seed + 1, k).flashes[0][0];
  });
  std::vector<double> tg, xg, xr;
  for (auto& e : hs) {
    tg.push_back(e.point.t);
    xg.push_back(wrap_box(e.point.x[0], p.L));
  }
  for (double x : rel.x[0]) xr.push_back(wrap_box(x, p.L));
  json cfg = to_json(p);
  cfg["v"] = v;
  std::vector<TestReport> out{compare_distributions("relativistic vs GRW first-flash time", rel.t[0], tg, Method::KS, p.alpha),
                              compare_distributions("relativistic vs GRW first-flash position", xr, xg, Method::KS, p.alpha)};
  for (auto& r : out) {
    r.config = cfg;
    r.asserted = asserted;
  }
  return out;
}

// Lab-frame mean waiting time of a packet moving at v against gamma(v) times
// the rest mean. Flashes are attributed to the packet when they lie within
// `tube` of its worldline in its rest frame (a frame-independent selection);
// this drops flashes that small hyperboloids throw far out along the light cone.
inline std::vector<TestReport> time_dilation_test(const DeskParams& p, double v, double tube, double tol = 0.05) {
  auto g = make_grid(p.L, p.M);
  const double eta = rapidity_from_velocity(v), gam = std::cosh(eta);
  const FlashModel m({DiracParticle(p.mass)}, p.tau, p.a);
  const SpinorField f0 = dirac_packet(g, p.mass, 0, p.width);
  const SpinorField fv = boost_free_state(f0, p.mass, eta);
  auto select = [&](const SampleSet& s, double e, std::vector<double>& t) {
    for (size_t k = 0; k < s.size(); ++k) {
      const SpacetimePoint rest = boost(point(s.t[0][k], s.x[0][k]), -e);
      if (std::abs(rest.x[0]) <= tube) t.push_back(s.t[0][k]);
    }
  };
  const SampleSet r0 = first_flashes(m, MultiTimeState<SpinorField>::product({f0}), {point(0, 0)}, p.samples,
                                     p.seed, p.workers);
  const SampleSet rv = first_flashes(m, MultiTimeState<SpinorField>::product({fv}), {point(0, 0)}, p.samples,
                                     p.seed + 1, p.workers);
  std::vector<double> t0, tv;
  select(r0, 0.0, t0);
  select(rv, eta, tv);
  const MeanEstimate m0 = mean_estimate(t0), mv = mean_estimate(tv);
  const double ratio = mv.mean / m0.mean;
  const double rel_err = std::hypot(mv.stderr_ / mv.mean, m0.stderr_ / m0.mean);
  json cfg = to_json(p);
  cfg["v"] = v;
  cfg["tube"] = tube;
  std::vector<TestReport> out;
  TestReport r = tolerance_report("moving/rest mean lab waiting time over gamma", "|ratio/gamma - 1|",
                                  std::abs(ratio / gam - 1), tol);
  r.note = "ratio " + std::to_string(ratio) + ", gamma " + std::to_string(gam) + ", relative MC error " +
           std::to_string(rel_err) + ", medians " + std::to_string(median(tv)) + " / " + std::to_string(median(t0));
  r.samples = {t0.size(), tv.size()};
  out.push_back(r);
  // proper waiting times do not see the motion
  const double rf = m.r_floor(), tau = p.tau;
  TestReport w = compare_to_cdf("proper waiting times of the moving packet are exponential", rv.wait[0],
                                [=](double d) { return d < rf ? 0.0 : -std::expm1(-(d - rf) / tau); }, p.alpha);
  out.push_back(w);
  for (auto& q : out) q.config = cfg;
  return out;
}

// Potential applied to particle 2 only; the particle-1 first-flash marginal
// must not change. The exact route evaluates the marginal with particle 2 on
// the plane t_bob, reached under either potential.
struct SignalingSetup {
  double t_bob = 15;        // particle 2 evolves under its potential up to this plane
  double barrier_x = 10, barrier_width = 1, barrier_height = 3;
  double bob_k = 1.0;       // particle-2 branches move apart with momenta +-bob_k
};

inline std::vector<TestReport> no_signaling_test(const DeskParams& p, const SignalingSetup& s = {}) {
  auto g = make_grid(p.L, p.M);
  const double L = p.L;
  const PotentialFn barrier = [=](double, double x) {
    const double d = wrap_box(x - s.barrier_x, L) / s.barrier_width;
    return s.barrier_height * std::exp(-0.5 * d * d);
  };
  const SpinorField a1 = dirac_packet(g, p.mass, -16, p.width), a2 = dirac_packet(g, p.mass, -6, p.width);
  const SpinorField b1 = dirac_packet(g, p.mass, 6, p.width, s.bob_k), b2 = dirac_packet(g, p.mass, 6, p.width, -s.bob_k);
  auto psi = MultiTimeState<SpinorField>::superposition({{1.0, {a1, b1}}, {1.0, {a2, b2}}});
  psi.normalize();
  const std::vector<SpacetimePoint> X{point(0, -11), point(0, 6)};
  json cfg = to_json(p);
  cfg["t_bob"] = s.t_bob;
  cfg["barrier"] = {s.barrier_x, s.barrier_width, s.barrier_height};
  std::vector<TestReport> out;

  // exact: particle-1 first-flash densities with particle 2 on the plane t_bob
  {
    PovmLabel l1, l2a, l2b;
    l1.grid = l2a.grid = l2b.grid = g;
    l1.mass = l2a.mass = l2b.mass = p.mass;
    l2a.t0 = l2b.t0 = s.t_bob;
    l2b.potential = barrier;
    const PovmEngine ea({l1, l2a}, p.tau, p.a), eb({l1, l2b}, p.tau, p.a);
    double worst = 0;
    for (FlashCoord y : {FlashCoord{2.0, 0.3}, FlashCoord{6.0, -0.6}, FlashCoord{12.0, 0.1}, FlashCoord{25.0, 0.05}}) {
      const double da = ea.joint_density(psi, X, {{y}, {}}), db = eb.joint_density(psi, X, {{y}, {}});
      worst = std::max(worst, std::abs(db / da - 1));
    }
    TestReport r = tolerance_report("exact particle-1 marginal under the particle-2 potential swap",
                                    "max relative difference", worst, 1e-6);
    r.config = cfg;
    out.push_back(r);
    // positive control: particle 2's own density does change
    const FlashModel fa({DiracParticle(p.mass), DiracParticle(p.mass)}, p.tau, p.a);
    const FlashModel fb({DiracParticle(p.mass), DiracParticle(p.mass, barrier)}, p.tau, p.a);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double change = 0;
    for (FlashCoord y : {FlashCoord{12.0, 0.5}, FlashCoord{18.0, 0.4}}) {
      const double qa = fa.generation_density(psi, X, {{nan, 0}, y}), qb = fb.generation_density(psi, X, {{nan, 0}, y});
      change = std::max(change, std::abs(qb / qa - 1));
    }
    TestReport c;
    c.name = "positive control: particle-2 density changes under its potential";
    c.statistic_name = "max relative change";
    c.statistic = change;
    c.tolerance = 1e-2;
    c.pass = change > 1e-2;
    c.config = cfg;
    out.push_back(c);
  }
  // sampled: joint first generation, particle-1 marginal from independent seeds
  {
    const FlashModel fa({DiracParticle(p.mass), DiracParticle(p.mass)}, p.tau, p.a);
    const FlashModel fb({DiracParticle(p.mass), DiracParticle(p.mass, barrier)}, p.tau, p.a);
    const SampleSet sa = first_flashes(fa, psi, X, p.samples, p.seed, p.workers);
    const SampleSet sb = first_flashes(fb, psi, X, p.samples, p.seed + 1, p.workers);
    out.push_back(compare_distributions("sampled particle-1 first-flash t under potential swap", sa.t[0], sb.t[0],
                                        Method::KS, p.alpha));
    out.push_back(compare_distributions("sampled particle-1 first-flash x under potential swap", sa.x[0], sb.x[0],
                                        Method::KS, p.alpha));
    TestReport c = compare_distributions("positive control: sampled particle-2 x changes", sa.x[1], sb.x[1],
                                         Method::KS, p.alpha);
    c.pass = c.p_value < p.alpha;
    out.push_back(c);
    for (size_t k = out.size() - 3; k < out.size(); ++k) out[k].config = cfg;
  }
  return out;
}

// two-particle cat states, entangled or product
inline MultiTimeState<SpinorField> cat_pair(const DeskParams& p, bool entangled, double d = 6) {
  auto g = make_grid(p.L, p.M);
  const SpinorField l = dirac_packet(g, p.mass, -d, p.width), r = dirac_packet(g, p.mass, d, p.width);
  if (entangled) {
    auto psi = MultiTimeState<SpinorField>::superposition({{1.0, {l, r}}, {1.0, {r, l}}});
    psi.normalize();
    return psi;
  }
  SpinorField c = l;
  c.values += r.values;
  c = normalized(c);
  return MultiTimeState<SpinorField>::product({c, c});
}

// mutual information of the joint first flashes Y1, Y2
inline std::vector<TestReport> nonlocality_test(const DeskParams& p, int bins = 8, double factor = 5) {
  const FlashModel m({DiracParticle(p.mass), DiracParticle(p.mass)}, p.tau, p.a);
  const std::vector<SpacetimePoint> X{point(0, 0), point(0, 0)};
  auto mi = [&](bool ent, std::uint64_t seed) {
    const SampleSet s = first_flashes(m, cat_pair(p, ent), X, p.samples, seed, p.workers);
    std::vector<Point2> pts;
    for (size_t k = 0; k < s.size(); ++k) pts.emplace_back(s.x[0][k], s.x[1][k]);
    return mutual_information(pts, bins);
  };
  const double me = mi(true, p.seed), mp = mi(false, p.seed + 1);
  TestReport r;
  r.name = "entangled mutual information over product baseline";
  r.statistic_name = "MI ratio";
  r.statistic = me / mp;
  r.tolerance = factor;
  r.pass = me > factor * mp;
  r.samples = {p.samples, p.samples};
  r.config = to_json(p);
  r.config["bins"] = bins;
  r.note = "MI entangled " + std::to_string(me) + " nats, product " + std::to_string(mp) + " nats";
  return {r};
}

// Next flash of label 1 from mixed-generation data (X1 of generation 0, Y2 of
// generation 1, state collapsed by Y2 alone) against the conditional of the
// joint first generation given Y2.
struct GenerationSetup {
  FlashCoord y2{6.0, 0.05};
  double alice = 8, bob = 3;  // branch offsets of the two particles
};

inline MultiTimeState<SpinorField> asymmetric_pair(const DeskParams& p, const GenerationSetup& s, bool entangled) {
  auto g = make_grid(p.L, p.M);
  const SpinorField al = dirac_packet(g, p.mass, -s.alice, p.width), ar = dirac_packet(g, p.mass, s.alice, p.width);
  const SpinorField bl = dirac_packet(g, p.mass, -s.bob, p.width), br = dirac_packet(g, p.mass, s.bob, p.width);
  if (entangled) {
    auto psi = MultiTimeState<SpinorField>::superposition({{1.0, {al, bl}}, {1.0, {ar, br}}});
    psi.normalize();
    return psi;
  }
  SpinorField a = al, b = bl;
  a.values += ar.values;
  b.values += 0.5 * br.values;
  return MultiTimeState<SpinorField>::product({normalized(a), normalized(b)});
}

inline std::vector<TestReport> generation_independence_test(const DeskParams& p, const GenerationSetup& s = {}) {
  const FlashModel m({DiracParticle(p.mass), DiracParticle(p.mass)}, p.tau, p.a);
  const std::vector<SpacetimePoint> X{point(0, 0), point(0, 0)};
  const SpacetimePoint y2 = embed(Hyperboloid(X[1], s.y2.dT), s.y2.chi);
  auto collapsed = [&](const MultiTimeState<SpinorField>& psi) {
    GenerationPlan plan;
    plan.role = {LabelRole::Marginal, LabelRole::Forced};
    plan.forced = {FlashCoord{}, s.y2};
    auto rs = TrajectoryStreams::make(p.seed, 0);
    return m.sample_generation(psi, X, rs, plan).phi;
  };
  json cfg = to_json(p);
  cfg["y2"] = {s.y2.dT, s.y2.chi};
  std::vector<TestReport> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto exact = [&](bool ent) {
    const auto psi = asymmetric_pair(p, s, ent);
    const auto phi = collapsed(psi);
    const double d2 = m.generation_density(psi, X, {{nan, 0}, s.y2});
    double worst = 0;
    for (FlashCoord y1 : {FlashCoord{2.0, 0.5}, FlashCoord{6.0, -0.8}, FlashCoord{15.0, 0.3}}) {
      const double nested = m.generation_density(psi, X, {y1, s.y2}) / d2;
      const double mixed = m.generation_density(phi, {X[0], y2}, {y1, {nan, 0}});
      worst = std::max(worst, std::abs(mixed / nested - 1));
    }
    return worst;
  };
  {
    TestReport r = tolerance_report("product state: mixed-generation vs nested conditional density",
                                    "max relative difference", exact(false), 1e-6);
    r.config = cfg;
    out.push_back(r);
    TestReport e = tolerance_report("entangled state: mixed-generation vs nested conditional density",
                                    "max relative difference", exact(true), 1e-3);
    e.asserted = false;
    e.note = "limited by the lab re-expression of the collapsed particle-2 factors";
    e.config = cfg;
    out.push_back(e);
  }
  {
    const auto psi = asymmetric_pair(p, s, true);
    GenerationPlan nested;
    nested.role = {LabelRole::Sample, LabelRole::Forced};
    nested.forced = {FlashCoord{}, s.y2};
    const SampleSet a = first_flashes(m, psi, X, p.samples, p.seed, p.workers, nested);
    const auto phi = collapsed(psi);
    GenerationPlan mixed;
    mixed.role = {LabelRole::Sample, LabelRole::Marginal};
    mixed.collapse = false;
    auto gens = parallel_map<FlashEvent>(p.samples, p.workers, [&](size_t k) {
      auto rs = TrajectoryStreams::make(p.seed + 1, k);
      return m.sample_generation(phi, {X[0], y2}, rs, mixed, 2).flashes.at(0);
    });
    std::vector<double> tb, xb;
    for (auto& e : gens) {
      tb.push_back(e.point.t);
      xb.push_back(e.point.x[0]);
    }
    out.push_back(compare_distributions("entangled: label-1 flash t, mixed vs nested", a.t[0], tb, Method::KS, p.alpha));
    out.push_back(compare_distributions("entangled: label-1 flash x, mixed vs nested", a.x[0], xb, Method::KS, p.alpha));
    out[out.size() - 1].config = out[out.size() - 2].config = cfg;
  }
  return out;
}

}  // namespace grwf
