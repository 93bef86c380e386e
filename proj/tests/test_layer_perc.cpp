#include <gtest/gtest.h>

#include <map>
#include <set>

#include "combarw/layer_percolation.hpp"
#include "combarw/shape_laws.hpp"

using namespace combarw;

namespace {

using C2 = Cell<2>;

std::vector<C2> sorted(std::vector<C2> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Brute force: enumerate every infection path and count them per terminal cell.
std::map<C2, double> path_counts(const std::vector<std::vector<Shape<2>>>& steps) {
  std::map<C2, double> cur{{C2{0, 0}, 1.0}};
  for (const auto& shapes : steps) {
    std::vector<std::int64_t> off{0};
    for (const auto& s : shapes) off.push_back(off.back() + s.r_max());
    std::map<C2, double> next;
    for (const auto& [c, w] : cur) {
      const int j = c[0] + c[1];
      for (const auto& p : shapes.at(j).points()) next[{static_cast<int>(off[j] + p[0]), c[1] + p[1]}] += w;
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

TEST(Infect, SingletonShapeStaysAtOrigin) {
  ScriptedLaw<2> law({{Shape<2>{}}, {Shape<2>{}}, {Shape<2>{}}});
  Percolation<2> p(law, 1);
  for (int k = 0; k < 3; ++k) {
    p.advance();
    EXPECT_EQ(p.cells(), (std::vector<C2>{{0, 0}}));
  }
}

TEST(Infect, DisplayedRuleOnDiagonalTwo) {
  ScriptedLaw<2> law({{Shape<2>{{0, 0}, {1, 0}, {2, 0}}, Shape<2>{{0, 0}, {1, 0}}, Shape<2>{{0, 0}, {1, 0}}}});
  StepShapes<2> shapes(law.start(0, 0));
  EXPECT_EQ(shapes.offset(2), 3);
  EXPECT_EQ(sorted(infect<2>({1, 1}, shapes)), (std::vector<C2>{{3, 1}, {4, 1}}));
  EXPECT_TRUE(infects<2>({1, 1}, {4, 1}, shapes));
  EXPECT_FALSE(infects<2>({1, 1}, {4, 0}, shapes));
}

TEST(Nu1, FigureSets) {
  const Nu1Law law;
  Percolation<2> p(law, 3);
  p.advance();
  EXPECT_EQ(p.cells(), sorted({{0, 0}, {1, 0}, {2, 0}, {1, 1}, {0, 2}, {1, 2}}));
  p.advance();
  const std::vector<C2> step2 = sorted({
      {0, 0}, {1, 0}, {2, 0}, {1, 1}, {0, 2}, {1, 2},                                   //
      {3, 0}, {3, 1}, {3, 2}, {2, 2}, {4, 0},                                           //
      {5, 0}, {5, 1}, {5, 2}, {4, 2}, {6, 0}, {6, 1}, {4, 1}, {5, 3}, {4, 3}, {6, 2},   //
      {5, 4}, {4, 4}, {7, 2}, {8, 2}, {7, 3}, {7, 4}, {6, 4}});
  EXPECT_EQ(p.cells(), step2);
  EXPECT_EQ(p.height(), 4);
}

TEST(Nu1, HeightIsTwiceStep) {
  const Nu1Law law;
  Percolation<2> p(law, 3);
  for (int k = 1; k <= 10; ++k) {
    p.advance();
    EXPECT_EQ(p.height(), 2 * k);
  }
  const auto xs = heights<2>(law, 500, 1);
  for (int k = 0; k <= 500; ++k) ASSERT_EQ(xs[k], 2 * k);
  const auto rho = rho_k<2>(law, 50, 4, 1);
  EXPECT_DOUBLE_EQ(rho.mean, 2.0);
  EXPECT_DOUBLE_EQ(rho.se, 0.0);
}

TEST(Domino, FigureReplay) {
  const auto V = domino_vertical(), H = domino_horizontal();
  ScriptedLaw<2> law({{H}, {V, H}, {H, H}});
  Percolation<2> p(law, 0);
  p.advance();
  EXPECT_EQ(p.cells(), sorted({{0, 0}, {1, 0}}));
  p.advance();
  EXPECT_EQ(p.cells(), sorted({{0, 0}, {1, 0}, {0, 1}}));
  p.advance();
  EXPECT_EQ(p.cells(), sorted({{0, 0}, {1, 0}, {2, 0}, {1, 1}, {2, 1}}));
}

TEST(Interval, FigureReplay) {
  const Shape<2> x0{{0, 0}, {1, 0}, {2, 0}, {1, 1}};
  const Shape<2> red{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}, {2, 1}};
  const Shape<2> orange{{0, 0}};
  const Shape<2> yellow{{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}};
  ScriptedLaw<2> law({{x0}, {red, orange, yellow}});
  Percolation<2> p(law, 0);
  p.advance();
  EXPECT_EQ(p.cells(), sorted({{0, 0}, {1, 0}, {1, 1}, {2, 0}}));
  p.advance();
  EXPECT_EQ(p.cells(), sorted({{0, 0}, {0, 1}, {1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1},
                               {3, 2}, {4, 0}, {4, 1}, {4, 2}, {5, 0}, {5, 1}}));
}

TEST(Percolation, MatchesBruteForceWithPathCounts) {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const double lambda = 0.3 + to_unit(rng()) * 2;
    std::vector<std::vector<Shape<2>>> steps;
    for (int k = 0; k < 5; ++k) {
      std::vector<Shape<2>> s;
      for (int j = 0; j < 300; ++j) s.push_back(interval_shape(sample_interval_meta(rng, lambda)));
      steps.push_back(std::move(s));
    }
    ScriptedLaw<2> law(steps);
    Percolation<2> p(law, 0, {.keep_history = true});
    for (int k = 0; k < 5; ++k) p.advance();
    const auto brute = path_counts(steps);
    std::vector<C2> bc;
    for (const auto& [c, w] : brute) bc.push_back(c);
    ASSERT_EQ(p.cells(), bc);
    // Path counts agree up to the per-step rescaling.
    double scale = 0;
    p.layer().for_each([&](const C2& c, double w) {
      const double r = brute.at(c) / w;
      if (scale == 0) scale = r;
      EXPECT_NEAR(r, scale, 1e-9 * scale);
    });
  }
}

TEST(Percolation, HomogeneousShortcutAgreesWithFullSets) {
  struct Nu1Full final : ShapeLaw<2> {
    std::unique_ptr<ShapeSource<2>> start(std::uint64_t s, int k) const override { return Nu1Law().start(s, k); }
    std::string name() const override { return "nu1-full"; }
  };
  const Nu1Full full;
  const Nu1Law fast;
  Percolation<2> p(full, 5);
  const auto xs = homogeneous_heights<2>(fast, 10, 5);
  for (int k = 1; k <= 10; ++k) {
    p.advance();
    EXPECT_EQ(p.height(), xs[k]);
  }
  // Also for a one-shape-per-step random law.
  struct OneShape final : ShapeLaw<2> {
    struct Src final : ShapeSource<2> {
      explicit Src(std::uint64_t s) {
        Rng r = make_rng(s);
        shape = interval_shape(sample_interval_meta(r, 1.0));
      }
      Shape<2> next() override { return shape; }
      Shape<2> shape;
    };
    std::unique_ptr<ShapeSource<2>> start(std::uint64_t s, int) const override { return std::make_unique<Src>(s); }
    std::string name() const override { return "one-shape"; }
    bool diagonal_homogeneous() const override { return homogeneous; }
    bool homogeneous = true;
  };
  OneShape a;
  OneShape b;
  b.homogeneous = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(heights<2>(a, 8, seed), heights<2>(b, 8, seed));
}

TEST(Percolation, CellCapGuard) {
  const DominoLaw law;
  Percolation<2> p(law, 1, {.keep_history = false, .cell_cap = 10});
  EXPECT_THROW(for (int k = 0; k < 20; ++k) p.advance(), GuardExceeded);
}

TEST(GreedyPath, KZeroIsOrigin) {
  const IntervalLaw law(1.0);
  Percolation<2> p(law, 1, {.keep_history = true});
  Rng rng = make_rng(1);
  const auto g = p.greedy_path(rng);
  EXPECT_EQ(g.height, 0);
  EXPECT_EQ(g.cells, (std::vector<C2>{{0, 0}}));
}

TEST(GreedyPath, ReplayAndHeight) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CombLaw law(0.8);
    Percolation<2> p(law, seed, {.keep_history = true});
    for (int k = 0; k < 15; ++k) p.advance();
    Rng rng = make_rng(seed);
    const auto g = p.greedy_path(rng);
    ASSERT_EQ(g.cells.size(), 16u);
    EXPECT_TRUE(p.replay(g.cells));
    EXPECT_EQ(s_sum<2>(g.cells.back()), p.height());
    auto bad = g.cells;
    bad.back()[1] += 5;
    EXPECT_FALSE(p.replay(bad));
  }
}

TEST(GreedyPath, UniformAmongAttainingPaths) {
  // Small hand-made instance where the attaining paths can be enumerated.
  const Shape<2> a{{0, 0}, {1, 0}, {0, 1}};
  const Shape<2> b{{0, 0}, {0, 1}, {1, 1}};
  ScriptedLaw<2> law({{a}, {b, a, b, a, b}, {a, b, a, b, a, b, a, b}});
  Percolation<2> p(law, 0, {.keep_history = true});
  for (int k = 0; k < 3; ++k) p.advance();
  std::map<std::vector<C2>, int> freq;
  Rng rng = make_rng(1);
  const int N = 30'000;
  for (int i = 0; i < N; ++i) ++freq[p.greedy_path(rng).cells];
  // Enumerate the attaining paths directly.
  std::set<std::vector<C2>> paths{{{0, 0}}};
  for (int k = 0; k < 3; ++k) {
    std::set<std::vector<C2>> next;
    for (const auto& path : paths) {
      StepShapes<2>& sh = p.shapes_at(k);
      for (const auto& c : infect<2>(path.back(), sh)) {
        auto q = path;
        q.push_back(c);
        next.insert(q);
      }
    }
    paths = std::move(next);
  }
  std::vector<std::vector<C2>> best;
  for (const auto& q : paths)
    if (s_sum<2>(q.back()) == p.height()) best.push_back(q);
  ASSERT_GE(best.size(), 2u);
  ASSERT_EQ(freq.size(), best.size());
  std::vector<double> obs, exp;
  for (const auto& q : best) {
    obs.push_back(freq[q]);
    exp.push_back(static_cast<double>(N) / best.size());
  }
  EXPECT_GT(chi_square_gof(obs, exp).p_value, 0.01);
}

TEST(Rho, IntervalFirstStepClosedForm) {
  for (double lambda : {0.5, 1.0}) {
    const IntervalLaw law(lambda);
    const auto e = rho_k<2>(law, 1, 10'000, 40);
    EXPECT_NEAR(e.mean, 2 * lambda / (1 + 2 * lambda), 3 * e.se);
  }
}

TEST(Rho, IncreasingInLambda) {
  const auto lo = rho_k<2>(IntervalLaw(0.3), 20, 300, 1);
  const auto hi = rho_k<2>(IntervalLaw(2.0), 20, 300, 2);
  EXPECT_LT(lo.mean + 3 * combined_se(lo.se, hi.se), hi.mean);
  EXPECT_THROW(rho_k<2>(IntervalLaw(1.0), 0, 3, 1), std::invalid_argument);
  EXPECT_THROW(rho_k<2>(IntervalLaw(1.0), 3, 0, 1), std::invalid_argument);
}

TEST(Heights, Superadditive) {
  const IntervalLaw il(1.0);
  const CombLaw cl(1.0);
  auto check = [](const ShapeLaw<2>& law, int reps) {
    std::vector<double> x5, x10, x20;
    for (int i = 0; i < reps; ++i) {
      const auto xs = heights<2>(law, 20, derive_seed(99, i));
      x5.push_back(xs[5]);
      x10.push_back(xs[10]);
      x20.push_back(xs[20]);
    }
    const auto a = estimate(x5), b = estimate(x10), c = estimate(x20);
    EXPECT_GE(b.mean, 2 * a.mean - 3 * combined_se(b.se, 2 * a.se)) << law.name();
    EXPECT_GE(c.mean, 2 * b.mean - 3 * combined_se(c.se, 2 * b.se)) << law.name();
  };
  check(il, 400);
  check(cl, 200);
}

TEST(Offsets, PrefixSumsOfRmax) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CombLaw law2(1.0);
    StepShapes<2> s2(law2.start(seed, 0));
    std::int64_t acc = 0;
    for (int j = 0; j < 50; ++j) {
      ASSERT_EQ(s2.offset(j), acc);
      acc += s2.shape(j).r_max();
    }
    const Comb3Law law3(1.0);
    StepShapes<3> s3(law3.start(seed, 0));
    acc = 0;
    for (int j = 0; j < 50; ++j) {
      ASSERT_EQ(s3.offset(j), acc);
      acc += s3.shape(j).r_max();
    }
    for (std::int64_t r = 0; r < acc; ++r) {
      const auto [j0, j1] = s3.diagonals_covering(r);
      for (int j = 0; j < s3.generated(); ++j) {
        const bool covers = s3.offset(j) <= r && r <= s3.offset(j) + s3.shape(j).r_max();
        ASSERT_EQ(covers, j >= j0 && j < j1) << "r=" << r << " j=" << j;
      }
    }
  }
}

TEST(Percolation, ThreeDimensionalRunsAndProjects) {
  const Comb3Law law(0.5);
  Percolation<3> p(law, 7, {.keep_history = true});
  for (int k = 0; k < 8; ++k) p.advance();
  Rng rng = make_rng(3);
  const auto g = p.greedy_path(rng);
  EXPECT_TRUE(p.replay(g.cells));
  EXPECT_EQ(s_sum<3>(g.cells.back()), p.height());
  for (const auto& c : p.cells()) EXPECT_GE(c[0], 0);
}
