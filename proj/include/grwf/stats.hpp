#pragma once

// Distribution comparisons: Kolmogorov-Smirnov (one- and two-sample, and the
// two-dimensional Fasano-Franceschini variant), chi-squared goodness of fit,
// histogram mutual information.

#include <algorithm>
#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "grwf/error.hpp"

namespace grwf {

struct TestStatistic {
  double statistic = 0;
  double p_value = 1;
  size_t n1 = 0, n2 = 0;
};

inline void require_samples(size_t n, const char* what) {
  if (n < 100)
    throw SimulationError(ErrorKind::InsufficientSamples, std::string(what) + " needs at least 100 samples, got " +
                                                              std::to_string(n));
}

// Q_KS(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2)
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 0.3) {
    // small-lambda form avoids the slowly converging alternating series
    const double y = std::exp(-M_PI * M_PI / (8 * lambda * lambda));
    double s = 0;
    for (int k = 1; k < 40; k += 2) s += std::pow(y, k * k);
    return std::clamp(1.0 - std::sqrt(2 * M_PI) / lambda * s, 0.0, 1.0);
  }
  double s = 0, sign = 1;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2 * s, 0.0, 1.0);
}

inline double ks_p_value(double D, double ne) {
  const double sq = std::sqrt(ne);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * D);
}

inline TestStatistic ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  require_samples(x.size(), "KS test");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, std::abs((i + 1) / n - F), std::abs(F - i / n)});
  }
  return {D, ks_p_value(D, n), x.size(), 0};
}

inline TestStatistic ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require_samples(a.size(), "KS test");
  require_samples(b.size(), "KS test");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double D = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(i / na - j / nb));
  }
  return {D, ks_p_value(D, na * nb / (na + nb)), a.size(), b.size()};
}

using Point2 = std::pair<double, double>;

namespace detail {

// For every query q: number of points p with p.x < q.x and p.y < q.y.
inline std::vector<size_t> dominance_counts(const std::vector<Point2>& pts, const std::vector<Point2>& queries) {
  std::vector<double> ys;
  ys.reserve(pts.size());
  for (auto& p : pts) ys.push_back(p.second);
  std::sort(ys.begin(), ys.end());
  std::vector<size_t> order_p(pts.size()), order_q(queries.size());
  std::iota(order_p.begin(), order_p.end(), 0);
  std::iota(order_q.begin(), order_q.end(), 0);
  std::sort(order_p.begin(), order_p.end(), [&](size_t a, size_t b) { return pts[a].first < pts[b].first; });
  std::sort(order_q.begin(), order_q.end(), [&](size_t a, size_t b) { return queries[a].first < queries[b].first; });
  std::vector<size_t> tree(ys.size() + 1, 0), out(queries.size());
  auto add = [&](size_t i) {
    for (++i; i < tree.size(); i += i & (~i + 1)) ++tree[i];
  };
  auto prefix = [&](size_t n) {  // sum over the first n ranks
    size_t s = 0;
    for (; n > 0; n -= n & (~n + 1)) s += tree[n];
    return s;
  };
  size_t ip = 0;
  for (size_t k : order_q) {
    while (ip < order_p.size() && pts[order_p[ip]].first < queries[k].first) {
      const double y = pts[order_p[ip]].second;
      add(std::lower_bound(ys.begin(), ys.end(), y) - ys.begin());
      ++ip;
    }
    out[k] = prefix(std::lower_bound(ys.begin(), ys.end(), queries[k].second) - ys.begin());
  }
  return out;
}

// quadrant fractions of `pts` around each query
inline std::vector<std::array<double, 4>> quadrant_fractions(const std::vector<Point2>& pts,
                                                             const std::vector<Point2>& queries) {
  const auto ll = dominance_counts(pts, queries);
  std::vector<double> xs, ys;
  for (auto& p : pts) {
    xs.push_back(p.first);
    ys.push_back(p.second);
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double n = static_cast<double>(pts.size());
  std::vector<std::array<double, 4>> out(queries.size());
  for (size_t k = 0; k < queries.size(); ++k) {
    const double lx = std::lower_bound(xs.begin(), xs.end(), queries[k].first) - xs.begin();
    const double ly = std::lower_bound(ys.begin(), ys.end(), queries[k].second) - ys.begin();
    const double a = ll[k];
    out[k] = {a / n, (lx - a) / n, (ly - a) / n, (n - lx - ly + a) / n};
  }
  return out;
}

inline double pearson(const std::vector<Point2>& p) {
  double mx = 0, my = 0;
  for (auto& v : p) {
    mx += v.first;
    my += v.second;
  }
  mx /= p.size();
  my /= p.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (auto& v : p) {
    sxy += (v.first - mx) * (v.second - my);
    sxx += (v.first - mx) * (v.first - mx);
    syy += (v.second - my) * (v.second - my);
  }
  return (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
}

}  // namespace detail

// Two-dimensional two-sample KS (Fasano-Franceschini: origins at all sample
// points, maximum quadrant discrepancy averaged over both samples).
inline TestStatistic ks_2d_two_sample(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  require_samples(a.size(), "2D KS test");
  require_samples(b.size(), "2D KS test");
  auto dmax = [&](const std::vector<Point2>& origins) {
    const auto fa = detail::quadrant_fractions(a, origins);
    const auto fb = detail::quadrant_fractions(b, origins);
    double d = 0;
    for (size_t k = 0; k < origins.size(); ++k)
      for (int q = 0; q < 4; ++q) d = std::max(d, std::abs(fa[k][q] - fb[k][q]));
    return d;
  };
  const double D = 0.5 * (dmax(a) + dmax(b));
  const double r1 = detail::pearson(a), r2 = detail::pearson(b);
  const double rr = std::sqrt(std::max(0.0, 1.0 - 0.5 * (r1 * r1 + r2 * r2)));
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double sq = std::sqrt(ne);
  const double p = kolmogorov_q(D * sq / (1.0 + rr * (0.25 - 0.75 / sq)));
  return {D, p, a.size(), b.size()};
}

inline double chi2_sf(double x, double dof) {
  if (x <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

// Pearson chi-squared of observed counts against expected probabilities
// (which are renormalized if they do not sum to one).
inline TestStatistic chi2_goodness_of_fit(const std::vector<double>& counts, const std::vector<double>& probs,
                                          int fitted = 0) {
  if (counts.size() != probs.size() || counts.size() < 2)
    throw SimulationError(ErrorKind::ConfigError, "chi-squared needs matching bins");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  require_samples(static_cast<size_t>(n), "chi-squared test");
  const double ptot = std::accumulate(probs.begin(), probs.end(), 0.0);
  double x2 = 0;
  for (size_t k = 0; k < counts.size(); ++k) {
    const double e = n * probs[k] / ptot;
    if (!(e > 0)) throw SimulationError(ErrorKind::ConfigError, "chi-squared bin with zero expectation");
    x2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  const double dof = static_cast<double>(counts.size()) - 1 - fitted;
  return {x2, chi2_sf(x2, dof), static_cast<size_t>(n), 0};
}

// bin index of v among increasing edges (interior edges only; outer bins are open)
inline int bin_of(const std::vector<double>& inner_edges, double v) {
  return static_cast<int>(std::upper_bound(inner_edges.begin(), inner_edges.end(), v) - inner_edges.begin());
}

// interior edges splitting the sample into `bins` equally populated bins
inline std::vector<double> quantile_edges(std::vector<double> v, int bins) {
  std::sort(v.begin(), v.end());
  std::vector<double> e;
  for (int k = 1; k < bins; ++k) e.push_back(v[std::min(v.size() - 1, v.size() * k / bins)]);
  return e;
}

// interior edges from a quantile function
inline std::vector<double> equal_mass_edges(const std::function<double(double)>& quantile, int bins) {
  std::vector<double> e;
  for (int k = 1; k < bins; ++k) e.push_back(quantile(static_cast<double>(k) / bins));
  return e;
}

// plug-in mutual information (nats) on equal-count marginal bins
inline double mutual_information(const std::vector<Point2>& p, int bins) {
  require_samples(p.size(), "mutual information");
  std::vector<double> xs, ys;
  for (auto& v : p) {
    xs.push_back(v.first);
    ys.push_back(v.second);
  }
  const auto ex = quantile_edges(xs, bins), ey = quantile_edges(ys, bins);
  std::vector<double> joint(bins * bins, 0), mx(bins, 0), my(bins, 0);
  for (auto& v : p) {
    const int i = bin_of(ex, v.first), j = bin_of(ey, v.second);
    joint[i * bins + j] += 1;
    mx[i] += 1;
    my[j] += 1;
  }
  const double n = static_cast<double>(p.size());
  double mi = 0;
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      const double c = joint[i * bins + j];
      if (c > 0) mi += c / n * std::log(c * n / (mx[i] * my[j]));
    }
  return mi;
}

struct MeanEstimate {
  double mean = 0, stderr_ = 0;
  size_t n = 0;
};

inline MeanEstimate mean_estimate(const std::vector<double>& v) {
  MeanEstimate m;
  m.n = v.size();
  if (v.empty()) return m;
  double s = 0, s2 = 0;
  for (double x : v) s += x;
  m.mean = s / v.size();
  for (double x : v) s2 += (x - m.mean) * (x - m.mean);
  m.stderr_ = v.size() > 1 ? std::sqrt(s2 / (v.size() - 1) / v.size()) : 0.0;
  return m;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  double m = v[k];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + k));
  return m;
}

}  // namespace grwf
