#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "combarw/layer_percolation.hpp"
#include "combarw/parallel.hpp"
#include "combarw/rng.hpp"
#include "combarw/shape_laws.hpp"
#include "combarw/stabilize.hpp"
#include "combarw/stats.hpp"

namespace combarw {

struct LowerBound {
  double estimate = 0.0;
  double se = 0.0;
  double truncation = 0.0;  // bound on the omitted K > k_max tail
  int k_max = 0;
  int replicas = 0;
};

/// lambda/(1+lambda) * (1 + E[X_K]) with K ~ Geo(lambda/(1+lambda)) independent of interval
/// percolation at 3*lambda/2. Each replica runs one percolation to k_max and contributes
/// sum_k P(K=k) X_k, so the k-terms share randomness.
inline LowerBound theorem2_lower(double lambda, int k_max, int replicas, std::uint64_t seed, int threads = 1) {
  if (k_max < 1) throw std::invalid_argument("k_max must be positive");
  if (replicas < 1) throw std::invalid_argument("replicas must be positive");
  const double p = sleep_probability(lambda);
  const double q = 1.0 - p;
  const IntervalLaw law(1.5 * lambda);
  auto ys = parallel_map(replicas, threads, [&](int i) {
    const auto xs = heights<2>(law, k_max, derive_seed(seed, static_cast<std::uint64_t>(i)));
    double y = 0.0, w = p;
    for (int k = 1; k <= k_max; ++k, w *= q) y += w * xs[k];
    return y;
  });
  const Estimate e = estimate(ys);
  LowerBound out;
  out.estimate = p * (1.0 + e.mean);
  out.se = p * e.se;
  // Interval shapes rise at most one row per step, so X_k <= k.
  out.truncation = p * std::pow(q, k_max) * (k_max + 1.0 / p);
  out.k_max = k_max;
  out.replicas = replicas;
  return out;
}

struct RenewalTrace {
  std::vector<std::int64_t> lengths;  // K_{n+1} - K_n
  std::vector<std::int64_t> rewards;  // s_{K_{n+1}} - s_{K_n}
  std::vector<std::int64_t> heights;  // X_K of the greedy path closing each segment
  double slope = 0.0;
  double slope_se = 0.0;
};

/// One renewal segment: greedy paths in the coupled interval subshapes for K = 1, 2, ...
/// until the final infection carries a positive T indicator; the segment then ends one row
/// higher. Returns (K, reward, X_K).
inline std::array<std::int64_t, 3> renewal_segment(double lambda, std::uint64_t seed, bool validate = false) {
  const CoupledSubshapeLaw law(lambda);
  Percolation<2> perc(law, seed, {.keep_history = true});
  Rng rng = make_rng(derive_seed(seed, ~0ULL));
  for (;;) {
    perc.advance();
    const int K = perc.step();
    const auto path = perc.greedy_path(rng);
    const auto& from = path.cells[K - 1];
    const auto& to = path.cells[K];
    auto& shapes = perc.shapes_at(K - 1);
    const int j = from[0] + from[1];
    const auto& src = static_cast<const CoupledSubshapeSource&>(shapes.source());
    const CombMeta& meta = src.metas()[j];
    const int r = static_cast<int>(to[0] - shapes.offset(j));
    const int s = to[1] - from[1];
    if (validate) {
      if (!perc.replay(path.cells)) throw std::logic_error("renewal path left the coupled subshapes");
      if (!shapes.shape(j).contains({r, s})) throw std::logic_error("renewal step outside subshape");
    }
    if (subshape_cell_T(meta, r, s)) {
      if (validate && !comb_shape(meta).contains({r, s + 1}))
        throw std::logic_error("terminal cell missing from the comb shape");
      return {K, path.height + 1, path.height};
    }
  }
}

inline RenewalTrace simulate_renewal_path(double lambda, int segments, std::uint64_t seed, int threads = 1,
                                          bool validate = false) {
  if (segments < 1) throw std::invalid_argument("segments must be positive");
  auto segs = parallel_map(segments, threads, [&](int i) {
    return renewal_segment(lambda, derive_seed(seed, static_cast<std::uint64_t>(i)), validate);
  });
  RenewalTrace t;
  double sl = 0, sr = 0;
  for (const auto& s : segs) {
    t.lengths.push_back(s[0]);
    t.rewards.push_back(s[1]);
    t.heights.push_back(s[2]);
    sl += s[0];
    sr += s[1];
  }
  t.slope = sr / sl;
  const double nseg = static_cast<double>(segments);
  double ss = 0.0;
  for (const auto& s : segs) {
    const double d = s[1] - t.slope * s[0];
    ss += d * d;
  }
  const double mean_len = sl / nseg;
  t.slope_se = nseg > 1 ? std::sqrt(ss / (nseg - 1) / nseg) / mean_len : 0.0;
  return t;
}

struct DensitySample {
  double teeth = 0.0;
  double spine = 0.0;
  double total = 0.0;
};

/// Stationary densities per replica (sleepers / n on each part).
inline std::vector<DensitySample> stationary_densities(const Graph& g, double lambda, int replicas,
                                                       std::uint64_t seed, int threads = 1) {
  return parallel_map(replicas, threads, [&](int i) {
    const auto r = exact_stationary_sample(g, lambda, derive_seed(seed, static_cast<std::uint64_t>(i)));
    DensitySample d;
    d.teeth = static_cast<double>(r.final.sleepers_on_teeth()) / g.n;
    d.spine = static_cast<double>(r.final.sleepers_on_spine()) / g.n;
    d.total = d.teeth + d.spine;
    return d;
  });
}

inline Estimate mean_total(const std::vector<DensitySample>& xs) {
  std::vector<double> v;
  for (const auto& d : xs) v.push_back(d.total);
  return estimate(v);
}

/// 1 + stationary interval density at 3*lambda/2.
inline Estimate theorem2_upper(double lambda, int n, int replicas, std::uint64_t seed, int threads = 1) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  Estimate e = mean_total(stationary_densities(Graph::interval(n), 1.5 * lambda, replicas, seed, threads));
  e.mean += 1.0;
  return e;
}

/// Finite-n proxy for the comb critical density: mean of S/n.
inline Estimate comb_density(double lambda, int n, int replicas, std::uint64_t seed, int threads = 1) {
  return mean_total(stationary_densities(Graph::comb(n), lambda, replicas, seed, threads));
}

struct PartialRun {
  std::int64_t tau = 0;
  std::int64_t S = 0;
  bool teeth_hold_one = false;
};

inline std::vector<PartialRun> partial_runs(int n, double lambda, int replicas, std::uint64_t seed, int threads = 1) {
  return parallel_map(replicas, threads, [&](int i) {
    const auto r = partial_spine_stabilize(n, lambda, derive_seed(seed, static_cast<std::uint64_t>(i)));
    return PartialRun{r.tau_size, r.final_sleepers, r.every_tooth_holds_one};
  });
}

struct BoundReport {
  double lambda = 0.0;
  int n = 0;
  int replicas = 0;
  std::uint64_t seed = 0;
  LowerBound lower;
  Estimate upper;
  Estimate direct;
  bool lower_le_direct = false;  // within 3 combined SE
  bool direct_le_upper = false;
};

inline BoundReport bounds_report(double lambda, int n, int replicas, int k_max, int lower_replicas,
                                 std::uint64_t seed, int threads = 1) {
  BoundReport b;
  b.lambda = lambda;
  b.n = n;
  b.replicas = replicas;
  b.seed = seed;
  b.lower = theorem2_lower(lambda, k_max, lower_replicas, derive_seed(seed, 1), threads);
  b.upper = theorem2_upper(lambda, n, replicas, derive_seed(seed, 2), threads);
  b.direct = comb_density(lambda, n, replicas, derive_seed(seed, 3), threads);
  b.lower_le_direct = b.lower.estimate - 3 * combined_se(b.lower.se, b.direct.se) <= b.direct.mean;
  b.direct_le_upper = b.direct.mean <= b.upper.mean + 3 * combined_se(b.upper.se, b.direct.se);
  return b;
}

struct Fig2Row {
  double lambda;
  Estimate teeth, spine, interval;
};

inline std::vector<Fig2Row> fig2_experiment(const std::vector<double>& grid, int n, int replicas, std::uint64_t seed,
                                            int threads = 1) {
  std::vector<Fig2Row> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double l = grid[g];
    const auto comb = stationary_densities(Graph::comb(n), l, replicas, derive_seed(seed, 2 * g), threads);
    const auto intv = stationary_densities(Graph::interval(n), l, replicas, derive_seed(seed, 2 * g + 1), threads);
    std::vector<double> t, s, i;
    for (const auto& d : comb) {
      t.push_back(d.teeth);
      s.push_back(d.spine);
    }
    for (const auto& d : intv) i.push_back(d.total);
    rows.push_back({l, estimate(t), estimate(s), estimate(i)});
  }
  return rows;
}

struct Fig3Row {
  std::int64_t step;
  double spine, tooth, avg;
};

inline std::vector<Fig3Row> fig3_experiment(double lambda, int n, std::int64_t steps, std::uint64_t seed) {
  std::vector<Fig3Row> rows;
  for (const auto& p : drive_dissipate(Graph::comb(n), lambda, steps, Driving{}, seed))
    rows.push_back({p.step, static_cast<double>(p.spine) / n, static_cast<double>(p.teeth) / n,
                    static_cast<double>(p.total) / (2.0 * n)});
  return rows;
}

}  // namespace combarw
