#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "combarw/rng.hpp"
#include "combarw/shape.hpp"

namespace combarw {

// ---------------------------------------------------------------------------
// Metadata and assembly

struct IntervalMeta {
  int R = 1;                // base width
  std::vector<char> top;    // top[c] for base column c
};

struct CombChunk {
  int R = 1;
  bool T = false;
  std::vector<char> S;  // S[l] for l = 0 .. R-1
};

struct CombMeta {
  std::vector<CombChunk> chunks;

  int U() const { return static_cast<int>(chunks.size()); }

  /// Overlap-concatenated width: sum R - (U - 1).
  int width() const {
    int w = 1;
    for (const auto& c : chunks) w += c.R - 1;
    return w;
  }

  /// First base column of chunk i.
  int start(int i) const {
    int c = 0;
    for (int k = 0; k < i; ++k) c += chunks[k].R - 1;
    return c;
  }
};

inline Shape<2> interval_shape(const IntervalMeta& m) {
  std::vector<Point<2>> pts;
  for (int c = 0; c < m.R; ++c) {
    pts.push_back({c, 0});
    if (m.top[c]) pts.push_back({c, 1});
  }
  return Shape<2>(std::move(pts));
}

/// Chunk columns carry a vertical strip of height T_i + S_{i,l} above the base.
inline Shape<2> comb_shape(const CombMeta& m) {
  std::vector<Point<2>> pts;
  int c0 = 0;
  for (const auto& ch : m.chunks) {
    for (int l = 0; l < ch.R; ++l) {
      const int h = static_cast<int>(ch.T) + static_cast<int>(ch.S[l]);
      for (int s = 0; s <= h; ++s) pts.push_back({c0 + l, s});
    }
    c0 += ch.R - 1;
  }
  return Shape<2>(std::move(pts));
}

/// The three-dimensional variant keeps the T and S contributions on separate axes.
inline Shape<3> comb3_shape(const CombMeta& m) {
  std::vector<Point<3>> pts;
  int c0 = 0;
  for (const auto& ch : m.chunks) {
    const int t = ch.T;
    for (int l = 0; l < ch.R; ++l) {
      const int s = ch.S[l];
      pts.push_back({c0 + l, 0, 0});
      pts.push_back({c0 + l, 0, t});
      pts.push_back({c0 + l, s, 0});
      pts.push_back({c0 + l, s, t});
    }
    c0 += ch.R - 1;
  }
  return Shape<3>(std::move(pts));
}

/// Interval subshape of a comb shape: the full base plus a top cell over every column
/// covered by at least one chunk whose S indicator fires there.
inline IntervalMeta coupled_subshape(const CombMeta& m) {
  IntervalMeta out;
  out.R = m.width();
  out.top.assign(out.R, 0);
  int c0 = 0;
  for (const auto& ch : m.chunks) {
    for (int l = 0; l < ch.R; ++l)
      if (ch.S[l]) out.top[c0 + l] = 1;
    c0 += ch.R - 1;
  }
  return out;
}

/// T indicator attached to a cell (r, s) of the coupled subshape: the first chunk covering
/// column r whose S fires there when s = 1, otherwise the first chunk covering r.
inline bool subshape_cell_T(const CombMeta& m, int r, int s) {
  int c0 = 0;
  for (const auto& ch : m.chunks) {
    if (r >= c0 && r < c0 + ch.R && (s == 0 || ch.S[r - c0])) return ch.T;
    c0 += ch.R - 1;
  }
  throw std::out_of_range("cell not in coupled subshape");
}

// ---------------------------------------------------------------------------
// Samplers

inline IntervalMeta sample_interval_meta(Rng& rng, double lambda) {
  IntervalMeta m;
  m.R = geometric(rng, 0.5);
  const double p = sleep_probability(lambda);
  m.top.resize(m.R);
  for (auto& t : m.top) t = bernoulli(rng, p);
  return m;
}

/// Chunk sampler for one sequence; carries the inheritance of T_{j,1}.
class CombChunkSampler {
 public:
  explicit CombChunkSampler(double lambda) : p_(sleep_probability(lambda)) {}

  CombMeta next(Rng& rng) {
    CombMeta m;
    const int U = geometric(rng, 0.5);
    m.chunks.resize(U);
    for (int i = 0; i < U; ++i) {
      auto& ch = m.chunks[i];
      ch.R = geometric(rng, 2.0 / 3.0);
      ch.T = bernoulli(rng, p_);
      if (i == 0 && started_) ch.T = last_T_;
      ch.S.resize(ch.R);
      for (auto& s : ch.S) s = bernoulli(rng, p_);
    }
    started_ = true;
    last_T_ = m.chunks.back().T;
    return m;
  }

 private:
  double p_;
  bool started_ = false;
  bool last_T_ = false;
};

inline const Shape<2>& nu1_glyph() {
  static const Shape<2> g{{0, 0}, {1, 0}, {2, 0}, {1, 1}, {1, 2}, {0, 2}};
  return g;
}

inline const Shape<2>& domino_vertical() {
  static const Shape<2> g{{0, 0}, {0, 1}};
  return g;
}

inline const Shape<2>& domino_horizontal() {
  static const Shape<2> g{{0, 0}, {1, 0}};
  return g;
}

// ---------------------------------------------------------------------------
// Law interface: one ShapeSource per percolation step yields Xi_0, Xi_1, ...

template <int D>
class ShapeSource {
 public:
  virtual ~ShapeSource() = default;
  virtual Shape<D> next() = 0;
};

template <int D>
class ShapeLaw {
 public:
  virtual ~ShapeLaw() = default;
  virtual std::unique_ptr<ShapeSource<D>> start(std::uint64_t seed, int step) const = 0;
  virtual std::string name() const = 0;
  /// True when every shape of a step's sequence is the same shape.
  virtual bool diagonal_homogeneous() const { return false; }
};

class Nu1Law final : public ShapeLaw<2> {
  struct Src final : ShapeSource<2> {
    Shape<2> next() override { return nu1_glyph(); }
  };

 public:
  std::unique_ptr<ShapeSource<2>> start(std::uint64_t, int) const override { return std::make_unique<Src>(); }
  std::string name() const override { return "nu1"; }
  bool diagonal_homogeneous() const override { return true; }
};

class DominoLaw final : public ShapeLaw<2> {
  struct Src final : ShapeSource<2> {
    explicit Src(std::uint64_t seed) : rng(make_rng(seed)) {}
    Shape<2> next() override { return bernoulli(rng, 0.5) ? domino_vertical() : domino_horizontal(); }
    Rng rng;
  };

 public:
  std::unique_ptr<ShapeSource<2>> start(std::uint64_t seed, int) const override {
    return std::make_unique<Src>(seed);
  }
  std::string name() const override { return "domino"; }
};

class IntervalLaw final : public ShapeLaw<2> {
  struct Src final : ShapeSource<2> {
    Src(std::uint64_t seed, double l) : rng(make_rng(seed)), lambda(l) {}
    Shape<2> next() override { return interval_shape(sample_interval_meta(rng, lambda)); }
    Rng rng;
    double lambda;
  };

 public:
  explicit IntervalLaw(double lambda) : lambda_(lambda) {}
  std::unique_ptr<ShapeSource<2>> start(std::uint64_t seed, int) const override {
    return std::make_unique<Src>(seed, lambda_);
  }
  std::string name() const override { return "interval"; }
  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

/// Source of comb chunk metadata that remembers every shape it produced.
class CombSource : public ShapeSource<2> {
 public:
  CombSource(std::uint64_t seed, double lambda) : rng_(make_rng(seed)), chunks_(lambda) {}
  Shape<2> next() override { return comb_shape(next_meta()); }
  const std::vector<CombMeta>& metas() const { return metas_; }

 protected:
  const CombMeta& next_meta() {
    metas_.push_back(chunks_.next(rng_));
    return metas_.back();
  }

 private:
  Rng rng_;
  CombChunkSampler chunks_;
  std::vector<CombMeta> metas_;
};

class CombLaw final : public ShapeLaw<2> {
 public:
  explicit CombLaw(double lambda) : lambda_(lambda) {}
  std::unique_ptr<ShapeSource<2>> start(std::uint64_t seed, int) const override {
    return std::make_unique<CombSource>(seed, lambda_);
  }
  std::string name() const override { return "comb"; }

 private:
  double lambda_;
};

class Comb3Law final : public ShapeLaw<3> {
  struct Src final : ShapeSource<3> {
    Src(std::uint64_t seed, double l) : rng(make_rng(seed)), chunks(l) {}
    Shape<3> next() override { return comb3_shape(chunks.next(rng)); }
    Rng rng;
    CombChunkSampler chunks;
  };

 public:
  explicit Comb3Law(double lambda) : lambda_(lambda) {}
  std::unique_ptr<ShapeSource<3>> start(std::uint64_t seed, int) const override {
    return std::make_unique<Src>(seed, lambda_);
  }
  std::string name() const override { return "comb3"; }

 private:
  double lambda_;
};

/// Interval subshapes read off comb shapes; marginally the interval law at 3*lambda/2.
class CoupledSubshapeSource final : public CombSource {
 public:
  using CombSource::CombSource;
  Shape<2> next() override { return interval_shape(coupled_subshape(next_meta())); }
};

class CoupledSubshapeLaw final : public ShapeLaw<2> {
 public:
  explicit CoupledSubshapeLaw(double lambda) : lambda_(lambda) {}
  std::unique_ptr<ShapeSource<2>> start(std::uint64_t seed, int) const override {
    return std::make_unique<CoupledSubshapeSource>(seed, lambda_);
  }
  std::string name() const override { return "coupled"; }

 private:
  double lambda_;
};

/// Fixed shape lists per step, for replaying hand-drawn examples.
template <int D>
class ScriptedLaw final : public ShapeLaw<D> {
  struct Src final : ShapeSource<D> {
    Src(const std::vector<Shape<D>>* s, int step) : shapes(s), step(step) {}
    Shape<D> next() override {
      if (!shapes || i >= shapes->size())
        throw std::out_of_range("scripted shapes exhausted at step " + std::to_string(step));
      return (*shapes)[i++];
    }
    const std::vector<Shape<D>>* shapes;
    int step;
    std::size_t i = 0;
  };

 public:
  explicit ScriptedLaw(std::vector<std::vector<Shape<D>>> steps) : steps_(std::move(steps)) {}
  std::unique_ptr<ShapeSource<D>> start(std::uint64_t, int step) const override {
    const auto* s = step < static_cast<int>(steps_.size()) ? &steps_[step] : nullptr;
    return std::make_unique<Src>(s, step);
  }
  std::string name() const override { return "scripted"; }

 private:
  std::vector<std::vector<Shape<D>>> steps_;
};

struct CoupledPair {
  CombMeta meta;
  Shape<2> comb;
  Shape<2> sub;
  IntervalMeta sub_meta;
};

/// m consecutive (comb shape, interval subshape) pairs from one sequence.
inline std::vector<CoupledPair> sample_coupled(double lambda, int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sequence length must be positive");
  Rng rng = make_rng(seed);
  CombChunkSampler sampler(lambda);
  std::vector<CoupledPair> out;
  out.reserve(m);
  for (int j = 0; j < m; ++j) {
    CombMeta meta = sampler.next(rng);
    IntervalMeta sub = coupled_subshape(meta);
    out.push_back({meta, comb_shape(meta), interval_shape(sub), sub});
  }
  return out;
}

}  // namespace combarw
