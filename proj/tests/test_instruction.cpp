#include <gtest/gtest.h>

#include "combarw/instructions.hpp"
#include "combarw/stats.hpp"

using namespace combarw;

TEST(InstructionStack, IndexZeroIsForced) {
  const InstructionStack st(Graph::comb(7), 0.8, 11);
  for (int v = 1; v <= 7; ++v) {
    EXPECT_EQ(st.at(SiteId::spine(v), 0), Instruction::Left);
    EXPECT_EQ(st.at(SiteId::tooth(v), 0), Instruction::Down);
  }
  const InstructionStack iv(Graph::interval(3), 0.8, 11);
  EXPECT_EQ(iv.at(SiteId::spine(2), 0), Instruction::Left);
}

TEST(InstructionStack, SinksAndMissingSitesThrow) {
  const InstructionStack st(Graph::comb(3), 1.0, 1);
  EXPECT_THROW(st.at(SiteId::sink(0), 1), InvalidSite);
  EXPECT_THROW(st.at(SiteId::sink(4), 1), InvalidSite);
  EXPECT_THROW(st.at(SiteId::spine(4), 1), InvalidSite);
  const InstructionStack iv(Graph::interval(3), 1.0, 1);
  EXPECT_THROW(iv.at(SiteId::tooth(1), 1), InvalidSite);
}

TEST(InstructionStack, RejectsNonPositiveLambda) {
  EXPECT_THROW(InstructionStack(Graph::comb(2), 0.0, 1), std::invalid_argument);
}

TEST(InstructionStack, Deterministic) {
  const InstructionStack a(Graph::comb(5), 1.3, 99);
  const InstructionStack b(Graph::comb(5), 1.3, 99);
  const Instruction first = a.at(SiteId::spine(3), -17);
  for (int i = 0; i < 1'000'000; ++i) ASSERT_EQ(a.at(SiteId::spine(3), -17), first);
  for (std::int64_t k = -500; k <= 500; ++k) {
    ASSERT_EQ(a.at(SiteId::spine(2), k), b.at(SiteId::spine(2), k));
    ASSERT_EQ(a.at(SiteId::tooth(4), k), b.at(SiteId::tooth(4), k));
  }
}

TEST(InstructionStack, AlphabetPerSite) {
  const InstructionStack comb(Graph::comb(4), 0.5, 3);
  const InstructionStack intv(Graph::interval(4), 0.5, 3);
  for (std::int64_t k = -2000; k <= 2000; ++k) {
    for (int v = 1; v <= 4; ++v) {
      const auto s = comb.at(SiteId::spine(v), k);
      EXPECT_TRUE(s != Instruction::Down);
      const auto t = comb.at(SiteId::tooth(v), k);
      EXPECT_TRUE(t == Instruction::Sleep || t == Instruction::Down);
      const auto i = intv.at(SiteId::spine(v), k);
      EXPECT_TRUE(i == Instruction::Sleep || i == Instruction::Left || i == Instruction::Right);
    }
  }
}

TEST(InstructionStack, SleepFrequencyMatchesMarginal) {
  const InstructionStack st(Graph::comb(1), 1.0, 2024);
  const int N = 100'000;
  int sleeps = 0, left = 0, right = 0, up = 0;
  for (int k = 1; k <= N; ++k) {
    switch (st.at(SiteId::spine(1), k)) {
      case Instruction::Sleep: ++sleeps; break;
      case Instruction::Left: ++left; break;
      case Instruction::Right: ++right; break;
      case Instruction::Up: ++up; break;
      default: FAIL();
    }
  }
  const double f = static_cast<double>(sleeps) / N;
  EXPECT_NEAR(f, 0.5, 3 * binomial_se(0.5, N));
  const auto chi = chi_square_gof({double(sleeps), double(left), double(right), double(up)},
                                  {N * 0.5, N / 6.0, N / 6.0, N / 6.0});
  EXPECT_GT(chi.p_value, 0.01);
}

TEST(InstructionStack, NegativeIndicesHaveSameMarginal) {
  const InstructionStack st(Graph::comb(1), 3.0, 5);
  const int N = 100'000;
  int sleeps = 0;
  for (int k = 1; k <= N; ++k) sleeps += st.at(SiteId::tooth(1), -k) == Instruction::Sleep;
  EXPECT_NEAR(static_cast<double>(sleeps) / N, 0.75, 3 * binomial_se(0.75, N));
}

TEST(InstructionStack, OverridesPinEntries) {
  const InstructionStack base(Graph::comb(2), 1.0, 8);
  const auto st = base.with(SiteId::spine(1), 5, Instruction::Up).with_listing(SiteId::tooth(2), -2, "S D");
  EXPECT_EQ(st.at(SiteId::spine(1), 5), Instruction::Up);
  EXPECT_EQ(st.at(SiteId::tooth(2), -2), Instruction::Sleep);
  EXPECT_EQ(st.at(SiteId::tooth(2), -1), Instruction::Down);
  EXPECT_EQ(st.at(SiteId::spine(1), 6), base.at(SiteId::spine(1), 6));
  EXPECT_THROW(base.with(SiteId::spine(1), 0, Instruction::Sleep), std::invalid_argument);
  EXPECT_THROW(base.with(SiteId::tooth(1), 3, Instruction::Up), std::invalid_argument);
  EXPECT_THROW(base.with(SiteId::sink(0), 3, Instruction::Left), InvalidSite);
  const InstructionStack iv(Graph::interval(2), 1.0, 8);
  EXPECT_THROW(iv.with(SiteId::spine(1), 2, Instruction::Up), std::invalid_argument);
}

TEST(CountKind, WorkedValues) {
  const InstructionStack base(Graph::comb(1), 1.0, 1);
  const SiteId v = SiteId::spine(1);
  for (auto k : kAllInstructions) EXPECT_EQ(count_kind(base, v, k, 0), 0);

  const auto neg = base.with(v, -1, Instruction::Right);
  EXPECT_EQ(count_kind(neg, v, Instruction::Left, -1), -1);

  const auto pos = base.with_listing(v, 1, "LSL");
  EXPECT_EQ(count_kind(pos, v, Instruction::Left, 3), 2);
  EXPECT_EQ(count_kind(pos, SiteId::sink(0), Instruction::Left, 3), 0);
}

TEST(CountKind, SumAndMonotonicity) {
  const InstructionStack st(Graph::comb(3), 0.7, 77);
  for (SiteId s : {SiteId::spine(2), SiteId::tooth(3)}) {
    std::array<std::int64_t, 5> prev{};
    for (std::int64_t u = -60; u <= 60; ++u) {
      std::int64_t total = 0;
      for (auto k : kAllInstructions) {
        const auto c = count_kind(st, s, k, u);
        total += c;
        if (u > -60) {
          EXPECT_GE(c, prev[static_cast<int>(k)]);
        }
        prev[static_cast<int>(k)] = c;
      }
      EXPECT_EQ(total, u);
      const auto all = count_all(st, s, u);
      for (auto k : kAllInstructions) EXPECT_EQ(all[k], count_kind(st, s, k, u));
      if (u < 0) {
        const Instruction forced = s.is_tooth() ? Instruction::Down : Instruction::Left;
        EXPECT_LE(count_kind(st, s, forced, u), -1);
      }
    }
  }
}

TEST(CountKind, IncrementIsTheInstructionAtU) {
  const InstructionStack st(Graph::comb(2), 1.1, 4);
  const SiteId s = SiteId::spine(1);
  for (std::int64_t u = -40; u <= 40; ++u)
    for (auto k : kAllInstructions)
      EXPECT_EQ(count_kind(st, s, k, u) - count_kind(st, s, k, u - 1), st.at(s, u) == k ? 1 : 0);
}

TEST(Odometer, ZeroAtSinks) {
  Odometer u(Graph::comb(2));
  u.set(SiteId::spine(1), -4);
  EXPECT_EQ(u(SiteId::spine(1)), -4);
  EXPECT_EQ(u(SiteId::sink(0)), 0);
  EXPECT_NO_THROW(u.set(SiteId::sink(3), 0));
  EXPECT_THROW(u.set(SiteId::sink(3), 1), InvalidSite);
}

TEST(Graph, Codes) {
  const Graph g = Graph::comb(4);
  for (int c = 0; c < g.site_count(); ++c) EXPECT_EQ(g.code(g.site(c)), c);
  EXPECT_THROW(g.code(SiteId::sink(0)), InvalidSite);
  EXPECT_THROW(Graph::comb(0), std::invalid_argument);
  EXPECT_EQ(g.spine_or_sink(5), SiteId::sink(5));
  EXPECT_EQ(to_string(SiteId::tooth(3)), "3'");
}
