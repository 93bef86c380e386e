#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace combarw {

/// Mean and standard error of the mean (sample sd / sqrt(n)); SE is 0 for n = 1.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::int64_t n = 0;
};

inline Estimate estimate(const std::vector<double>& xs) {
  Estimate e;
  e.n = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return e;
  double s = 0.0;
  for (double x : xs) s += x;
  e.mean = s / e.n;
  if (e.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (e.n - 1) / e.n);
  }
  return e;
}

inline double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

/// Binomial SE of a proportion p over n trials.
inline double binomial_se(double p, std::int64_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit. Adjacent cells are pooled from the right until every expected
/// count is at least 5; `expected` should already include any tail mass in its last cell.
inline ChiSquare chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty()) throw std::invalid_argument("chi-square: size mismatch");
  std::vector<double> o, e;
  double ao = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ao += observed[i];
    ae += expected[i];
    if (ae >= 5.0) {
      o.push_back(ao);
      e.push_back(ae);
      ao = ae = 0.0;
    }
  }
  if (ae > 0.0 || ao > 0.0) {
    if (e.empty()) {
      o.push_back(ao);
      e.push_back(ae);
    } else {
      o.back() += ao;
      e.back() += ae;
    }
  }
  ChiSquare r;
  for (std::size_t i = 0; i < o.size(); ++i) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  r.dof = static_cast<int>(o.size()) - 1;
  if (r.dof < 1) return r;
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

/// Goodness of fit of positive-integer samples to Geo(p) on {1, 2, ...}.
inline ChiSquare geometric_gof(const std::vector<std::int64_t>& samples, double p) {
  std::int64_t max = 1;
  for (auto x : samples) {
    if (x < 1) throw std::invalid_argument("geometric sample below 1");
    max = std::max(max, x);
  }
  const double n = static_cast<double>(samples.size());
  std::vector<double> obs(max, 0.0), exp(max, 0.0);
  for (auto x : samples) obs[x - 1] += 1.0;
  double tail = 1.0;
  for (std::int64_t k = 1; k <= max; ++k) {
    const double pk = p * std::pow(1.0 - p, static_cast<double>(k - 1));
    exp[k - 1] = n * pk;
    tail -= pk;
  }
  exp[max - 1] += n * std::max(tail, 0.0);
  return chi_square_gof(obs, exp);
}

/// Least-squares fit of a continuous piecewise-linear function that rises linearly and
/// then stays flat: y = a + b * min(x, x0). Scans the breakpoint over the sample grid.
struct HockeyStickFit {
  double intercept = 0.0;
  double slope = 0.0;
  double breakpoint = 0.0;
  double plateau = 0.0;
  double r_squared = 0.0;
};

inline HockeyStickFit fit_hockey_stick(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw std::invalid_argument("hockey-stick fit needs matching samples");
  double ym = 0.0;
  for (double v : y) ym += v;
  ym /= n;
  double sst = 0.0;
  for (double v : y) sst += (v - ym) * (v - ym);
  HockeyStickFit best;
  double best_sse = INFINITY;
  const std::size_t stride = std::max<std::size_t>(1, n / 400);
  for (std::size_t k = 1; k < n; k += stride) {
    const double x0 = x[k];
    double sz = 0, szz = 0, sy = 0, szy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = std::min(x[i], x0);
      sz += z;
      szz += z * z;
      sy += y[i];
      szy += z * y[i];
    }
    const double den = n * szz - sz * sz;
    if (den <= 0) continue;
    const double b = (n * szy - sz * sy) / den;
    const double a = (sy - b * sz) / n;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - a - b * std::min(x[i], x0);
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = {a, b, x0, a + b * x0, sst > 0 ? 1.0 - sse / sst : 1.0};
    }
  }
  return best;
}

}  // namespace combarw
