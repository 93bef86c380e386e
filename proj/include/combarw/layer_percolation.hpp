#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "combarw/errors.hpp"
#include "combarw/parallel.hpp"
#include "combarw/rng.hpp"
#include "combarw/shape.hpp"
#include "combarw/shape_laws.hpp"
#include "combarw/stats.hpp"

namespace combarw {

template <int D>
using Cell = Point<D>;

/// The shape sequence drawn for one step, generated lazily up to the largest diagonal
/// queried, with the prefix sums ell_j of the r_max values.
template <int D>
class StepShapes {
 public:
  explicit StepShapes(std::unique_ptr<ShapeSource<D>> src) : src_(std::move(src)), offsets_{0} {}

  const Shape<D>& shape(int j) {
    if (j < 0) throw std::out_of_range("negative diagonal");
    while (static_cast<int>(shapes_.size()) <= j) {
      shapes_.push_back(src_->next());
      offsets_.push_back(offsets_.back() + shapes_.back().r_max());
    }
    return shapes_[j];
  }

  std::int64_t offset(int j) {
    shape(j);
    return offsets_[j];
  }

  int generated() const { return static_cast<int>(shapes_.size()); }
  const std::vector<Shape<D>>& shapes() const { return shapes_; }
  const ShapeSource<D>& source() const { return *src_; }

  /// Diagonals j < generated() whose window [ell_j, ell_j + r_max_j] contains r.
  std::pair<int, int> diagonals_covering(std::int64_t r) const {
    const int g = generated();
    auto lo = std::lower_bound(offsets_.begin() + 1, offsets_.begin() + g + 1, r);
    auto hi = std::upper_bound(offsets_.begin(), offsets_.begin() + g, r);
    return {static_cast<int>(lo - offsets_.begin()) - 1, static_cast<int>(hi - offsets_.begin())};
  }

 private:
  std::unique_ptr<ShapeSource<D>> src_;
  std::vector<Shape<D>> shapes_;
  std::vector<std::int64_t> offsets_;
};

/// Cells infected by `c` under the given step shapes.
template <int D>
std::vector<Cell<D>> infect(const Cell<D>& c, StepShapes<D>& shapes) {
  const int j = diagonal<D>(c);
  const auto& sh = shapes.shape(j);
  const std::int64_t off = shapes.offset(j);
  std::vector<Cell<D>> out;
  out.reserve(sh.size());
  for (const auto& p : sh.points()) {
    Cell<D> t;
    t[0] = static_cast<int>(off + p[0]);
    for (int i = 1; i < D; ++i) t[i] = c[i] + p[i];
    out.push_back(t);
  }
  return out;
}

template <int D>
bool infects(const Cell<D>& from, const Cell<D>& to, StepShapes<D>& shapes) {
  const int j = diagonal<D>(from);
  Point<D> rel;
  rel[0] = static_cast<int>(to[0] - shapes.offset(j));
  for (int i = 1; i < D; ++i) rel[i] = to[i] - from[i];
  for (int x : rel)
    if (x < 0) return false;
  return shapes.shape(j).contains(rel);
}

/// One step of the infection set. Rows are indexed by the s-coordinates; each row stores a
/// window of r values with the number of infection paths from the origin (rescaled per step
/// so the largest is 1; zero means not infected).
template <int D>
struct Layer {
  struct Row {
    int r0 = 0;
    std::vector<double> w;
  };
  std::array<int, D - 1> ext{};
  std::vector<Row> rows;
  std::size_t cells = 0;

  std::size_t index(const Cell<D>& c) const {
    std::size_t k = 0;
    for (int i = 1; i < D; ++i) k = k * ext[i - 1] + c[i];
    return k;
  }

  Cell<D> row_key(std::size_t k) const {
    Cell<D> c{};
    for (int i = D - 1; i >= 1; --i) {
      c[i] = static_cast<int>(k % ext[i - 1]);
      k /= ext[i - 1];
    }
    return c;
  }

  bool in_range(const Cell<D>& c) const {
    for (int i = 1; i < D; ++i)
      if (c[i] < 0 || c[i] >= ext[i - 1]) return false;
    return c[0] >= 0;
  }

  double weight(const Cell<D>& c) const {
    if (!in_range(c)) return 0.0;
    const Row& row = rows[index(c)];
    const long off = static_cast<long>(c[0]) - row.r0;
    if (off < 0 || off >= static_cast<long>(row.w.size())) return 0.0;
    return row.w[off];
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Row& row = rows[k];
      if (row.w.empty()) continue;
      Cell<D> c = row_key(k);
      for (std::size_t x = 0; x < row.w.size(); ++x) {
        if (row.w[x] == 0.0) continue;
        c[0] = row.r0 + static_cast<int>(x);
        f(c, row.w[x]);
      }
    }
  }

  static Layer origin() {
    Layer l;
    l.ext.fill(1);
    l.rows.resize(1);
    l.rows[0].w = {1.0};
    l.cells = 1;
    return l;
  }
};

template <int D>
struct GreedyPath {
  std::vector<Cell<D>> cells;
  int height = 0;
};

struct PercolationOptions {
  bool keep_history = false;
  std::size_t cell_cap = 50'000'000;
};

/// nu-layer percolation from the origin. Every step draws a fresh shape sequence from the
/// law, seeded by (seed, step).
template <int D>
class Percolation {
 public:
  Percolation(const ShapeLaw<D>& law, std::uint64_t seed, PercolationOptions opt = {})
      : law_(law), seed_(seed), opt_(opt), current_(Layer<D>::origin()) {
    if (opt_.keep_history) history_.push_back(current_);
  }

  int step() const { return step_; }
  const Layer<D>& layer() const { return current_; }

  void advance() {
    StepShapes<D> shapes(law_.start(derive_seed(seed_, static_cast<std::uint64_t>(step_)), step_));
    int jmax = 0;
    current_.for_each([&](const Cell<D>& c, double) { jmax = std::max(jmax, diagonal<D>(c)); });
    std::array<int, D - 1> smax{};
    for (int j = 0; j <= jmax; ++j)
      for (const auto& p : shapes.shape(j).points())
        for (int i = 1; i < D; ++i) smax[i - 1] = std::max(smax[i - 1], p[i]);

    Layer<D> next;
    for (int i = 0; i < D - 1; ++i) next.ext[i] = current_.ext[i] + smax[i];
    std::size_t nrows = 1;
    for (int e : next.ext) nrows *= static_cast<std::size_t>(e);
    std::vector<int> lo(nrows, INT_MAX), hi(nrows, -1);

    auto visit = [&](auto&& emit) {
      current_.for_each([&](const Cell<D>& c, double w) {
        const int j = diagonal<D>(c);
        const auto& sh = shapes.shape(j);
        const std::int64_t off = shapes.offset(j);
        for (const auto& p : sh.points()) {
          Cell<D> t;
          t[0] = static_cast<int>(off + p[0]);
          for (int i = 1; i < D; ++i) t[i] = c[i] + p[i];
          emit(t, w);
        }
      });
    };
    visit([&](const Cell<D>& t, double) {
      const std::size_t k = next.index(t);
      lo[k] = std::min(lo[k], t[0]);
      hi[k] = std::max(hi[k], t[0]);
    });
    next.rows.resize(nrows);
    std::size_t window = 0;
    for (std::size_t k = 0; k < nrows; ++k) {
      if (hi[k] < 0) continue;
      next.rows[k].r0 = lo[k];
      window += static_cast<std::size_t>(hi[k] - lo[k] + 1);
      if (window > opt_.cell_cap)
        throw GuardExceeded("infection set exceeds cell cap of " + std::to_string(opt_.cell_cap));
      next.rows[k].w.assign(static_cast<std::size_t>(hi[k] - lo[k] + 1), 0.0);
    }
    visit([&](const Cell<D>& t, double w) {
      auto& row = next.rows[next.index(t)];
      row.w[t[0] - row.r0] += w;
    });
    double wmax = 0.0;
    std::size_t cells = 0;
    for (auto& row : next.rows)
      for (double x : row.w)
        if (x > 0) {
          ++cells;
          wmax = std::max(wmax, x);
        }
    for (auto& row : next.rows)
      for (double& x : row.w) x /= wmax;
    next.cells = cells;

    current_ = std::move(next);
    ++step_;
    if (opt_.keep_history) {
      history_.push_back(current_);
      step_shapes_.push_back(std::move(shapes));
    }
  }

  /// X_k: the largest s-sum in the current infection set.
  int height() const {
    int h = 0;
    current_.for_each([&](const Cell<D>& c, double) { h = std::max(h, s_sum<D>(c)); });
    return h;
  }

  std::size_t cell_count() const { return current_.cells; }

  std::vector<Cell<D>> cells() const { return collect(current_); }

  std::vector<Cell<D>> cells_at(int k) const { return collect(history_at(k)); }

  StepShapes<D>& shapes_at(int k) {
    require_history();
    if (k < 0 || k >= step_) throw std::out_of_range("no shapes recorded for step " + std::to_string(k));
    return step_shapes_[k];
  }

  /// A greedy path ending at the current step, uniform among all paths from the origin that
  /// attain the maximal height.
  GreedyPath<D> greedy_path(Rng& rng) {
    require_history();
    GreedyPath<D> out;
    out.height = height();
    std::vector<std::pair<Cell<D>, double>> cand;
    current_.for_each([&](const Cell<D>& c, double w) {
      if (s_sum<D>(c) == out.height) cand.push_back({c, w});
    });
    Cell<D> c = pick(cand, rng);
    out.cells.assign(step_ + 1, Cell<D>{});
    out.cells[step_] = c;
    for (int k = step_ - 1; k >= 0; --k) {
      c = pick(predecessors(c, k), rng);
      out.cells[k] = c;
    }
    return out;
  }

  /// Predecessors of `to` (a cell at step k+1) in the step-k infection set, with path weights.
  std::vector<std::pair<Cell<D>, double>> predecessors(const Cell<D>& to, int k) {
    require_history();
    StepShapes<D>& shapes = step_shapes_[k];
    const Layer<D>& prev = history_[k];
    std::vector<std::pair<Cell<D>, double>> out;
    const auto [j0, j1] = shapes.diagonals_covering(to[0]);
    for (int j = j0; j < j1; ++j) {
      const std::int64_t rel = to[0] - shapes.offset(j);
      for (const auto& p : shapes.shape(j).points()) {
        if (p[0] != rel) continue;
        Cell<D> c;
        int ssum = 0;
        bool ok = true;
        for (int i = 1; i < D; ++i) {
          c[i] = to[i] - p[i];
          ok = ok && c[i] >= 0;
          ssum += c[i];
        }
        c[0] = j - ssum;
        if (!ok || c[0] < 0) continue;
        const double w = prev.weight(c);
        if (w > 0) out.push_back({c, w});
      }
    }
    return out;
  }

  /// True if consecutive cells of `path` (starting at the origin) satisfy the infection
  /// relation for the recorded shapes.
  bool replay(const std::vector<Cell<D>>& path) {
    require_history();
    if (path.empty() || path.front() != Cell<D>{}) return false;
    if (static_cast<int>(path.size()) > step_ + 1) return false;
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
      if (!infects<D>(path[k], path[k + 1], step_shapes_[k])) return false;
    return true;
  }

 private:
  void require_history() const {
    if (!opt_.keep_history) throw std::logic_error("percolation history was not kept");
  }

  const Layer<D>& history_at(int k) const {
    require_history();
    if (k < 0 || k > step_) throw std::out_of_range("step out of range");
    return history_[k];
  }

  static std::vector<Cell<D>> collect(const Layer<D>& l) {
    std::vector<Cell<D>> out;
    out.reserve(l.cells);
    l.for_each([&](const Cell<D>& c, double) { out.push_back(c); });
    std::sort(out.begin(), out.end());
    return out;
  }

  static Cell<D> pick(const std::vector<std::pair<Cell<D>, double>>& cand, Rng& rng) {
    if (cand.empty()) throw std::logic_error("no predecessor found while tracing a greedy path");
    double total = 0.0;
    for (const auto& c : cand) total += c.second;
    double x = std::uniform_real_distribution<double>(0.0, total)(rng);
    for (const auto& c : cand) {
      if (x < c.second) return c.first;
      x -= c.second;
    }
    return cand.back().first;
  }

  const ShapeLaw<D>& law_;
  std::uint64_t seed_;
  PercolationOptions opt_;
  int step_ = 0;
  Layer<D> current_;
  std::vector<Layer<D>> history_;
  std::vector<StepShapes<D>> step_shapes_;
};

/// X_0, ..., X_K when every step uses one shape on all diagonals. Then the s-part of a path
/// ignores r, and the reachable s-vectors at step k+1 are the sumset of those at step k with
/// the s-parts of the step's shape.
template <int D>
std::vector<int> homogeneous_heights(const ShapeLaw<D>& law, int K, std::uint64_t seed) {
  using S = std::array<int, D - 1>;
  std::vector<S> reach{S{}};
  std::vector<int> xs{0};
  for (int k = 0; k < K; ++k) {
    const Shape<D> sh = law.start(derive_seed(seed, static_cast<std::uint64_t>(k)), k)->next();
    std::vector<S> next;
    for (const auto& a : reach)
      for (const auto& p : sh.points()) {
        S b;
        for (int i = 0; i < D - 1; ++i) b[i] = a[i] + p[i + 1];
        next.push_back(b);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    reach = std::move(next);
    int h = 0;
    for (const auto& a : reach) {
      int t = 0;
      for (int x : a) t += x;
      h = std::max(h, t);
    }
    xs.push_back(h);
  }
  return xs;
}

/// X_0, ..., X_K from a single run.
template <int D>
std::vector<int> heights(const ShapeLaw<D>& law, int K, std::uint64_t seed, PercolationOptions opt = {}) {
  if (law.diagonal_homogeneous()) return homogeneous_heights<D>(law, K, seed);
  Percolation<D> p(law, seed, opt);
  std::vector<int> xs{0};
  for (int k = 1; k <= K; ++k) {
    p.advance();
    xs.push_back(p.height());
  }
  return xs;
}

/// Estimate of rho^(k) = E[X_k]/k over independent replicas.
template <int D>
Estimate rho_k(const ShapeLaw<D>& law, int k, int replicas, std::uint64_t seed, int threads = 1) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (replicas < 1) throw std::invalid_argument("replicas must be positive");
  auto xs = parallel_map(replicas, threads, [&](int i) {
    return static_cast<double>(heights<D>(law, k, derive_seed(seed, static_cast<std::uint64_t>(i))).back()) / k;
  });
  return estimate(xs);
}

}  // namespace combarw
