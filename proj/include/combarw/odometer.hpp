#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "combarw/configuration.hpp"
#include "combarw/errors.hpp"
#include "combarw/instructions.hpp"
#include "combarw/shape.hpp"
#include "combarw/shape_laws.hpp"

namespace combarw {

inline constexpr std::int64_t kIndexSearchGuard = 10'000'000;

/// Smallest u with signed count N_kind(u) == c at `code`. Requires instr(0) == kind, which
/// holds for Left on the spine and Down on the teeth.
inline std::int64_t minimal_index_with_count(const InstructionStack& stack, int code, Instruction kind,
                                             std::int64_t c) {
  if (c >= 1) {
    std::int64_t seen = 0;
    for (std::int64_t i = 1; i <= kIndexSearchGuard; ++i)
      if (stack.at_code(code, i) == kind && ++seen == c) return i;
  } else {
    std::int64_t seen = 0;
    for (std::int64_t i = 0; i >= -kIndexSearchGuard; --i)
      if (stack.at_code(code, i) == kind && ++seen == 1 - c) return i;
  }
  throw GuardExceeded("minimal-odometer search passed index guard");
}

/// The minimal odometer, built along the spine from site 1 with net flow f0 from the left
/// sink into site 1. On the interval graph the tooth step is skipped.
inline Odometer minimal_odometer(const InstructionStack& stack, const Configuration& sigma, std::int64_t f0) {
  const Graph& g = stack.graph();
  Odometer m(g);
  std::int64_t rt_prev = 0;
  std::int64_t mass_before = 0;
  for (int v = 1; v <= g.n; ++v) {
    const SiteId sv = SiteId::spine(v);
    const int code = g.code(sv);
    const std::int64_t target = rt_prev - f0 - mass_before;
    m.at_code(code) = minimal_index_with_count(stack, code, Instruction::Left, target);
    const auto counts = count_all(stack, sv, m.at_code(code));
    rt_prev = counts[Instruction::Right];
    mass_before += sigma.mass(sv);
    if (g.has_teeth()) {
      const SiteId tv = SiteId::tooth(v);
      const int tc = g.code(tv);
      m.at_code(tc) = minimal_index_with_count(stack, tc, Instruction::Down, counts[Instruction::Up] + sigma.mass(tv));
      mass_before += sigma.mass(tv);
    }
  }
  return m;
}

enum class Boundary : std::uint8_t {
  OpenRight,  // stability required on spine 1..n-1 and all teeth
  Closed      // also at spine n, against the right sink
};

struct Violation {
  SiteId site;
  std::string what;
};

struct StabilityReport {
  bool stable = true;
  std::vector<Violation> violations;
};

/// Checks mass balance and the last-instruction-sleep rule, the flow condition at site 1,
/// and the spine and tooth flow identities. Never throws for well-formed inputs.
inline StabilityReport verify_stable(const Odometer& u, const InstructionStack& stack, const Configuration& sigma,
                                     std::int64_t f0, Boundary boundary = Boundary::OpenRight) {
  const Graph& g = stack.graph();
  const int n = g.n;
  StabilityReport rep;
  auto fail = [&](SiteId s, std::string w) {
    rep.stable = false;
    rep.violations.push_back({s, std::move(w)});
  };
  std::vector<InstructionCounts> sp(n + 2), th(n + 2);
  std::vector<char> sleep_sp(n + 2, 0), sleep_th(n + 2, 0);
  for (int v = 1; v <= n; ++v) {
    const SiteId s = SiteId::spine(v);
    sp[v] = count_all(stack, s, u(s));
    sleep_sp[v] = stack.at(s, u(s)) == Instruction::Sleep;
    if (g.has_teeth()) {
      const SiteId t = SiteId::tooth(v);
      th[v] = count_all(stack, t, u(t));
      sleep_th[v] = stack.at(t, u(t)) == Instruction::Sleep;
    }
  }
  auto balance = [&](SiteId s, std::int64_t h, bool sleeping) {
    if (h != 0 && h != 1) fail(s, "mass balance h=" + std::to_string(h));
    else if ((h == 1) != sleeping)
      fail(s, h == 1 ? "particle left without a final sleep" : "final sleep with no particle left");
  };
  const int last = boundary == Boundary::Closed ? n : n - 1;
  for (int v = 1; v <= last; ++v) {
    const SiteId s = SiteId::spine(v);
    std::int64_t in = sp[v - 1][Instruction::Right] + sp[v + 1][Instruction::Left];
    std::int64_t out = sp[v][Instruction::Right] + sp[v][Instruction::Left];
    if (g.has_teeth()) {
      in += th[v][Instruction::Down];
      out += sp[v][Instruction::Up];
    }
    balance(s, sigma.mass(s) + in - out, sleep_sp[v]);
  }
  if (g.has_teeth())
    for (int v = 1; v <= n; ++v) {
      const SiteId t = SiteId::tooth(v);
      balance(t, sigma.mass(t) + sp[v][Instruction::Up] - th[v][Instruction::Down], sleep_th[v]);
    }
  if (-sp[1][Instruction::Left] != f0)
    fail(SiteId::spine(1), "net flow into site 1 is " + std::to_string(-sp[1][Instruction::Left]) + ", expected " +
                               std::to_string(f0));

  // Flow identities: f_v = f0 + sum_{i<=v} mass - s_v and d_v' = |sigma(v')| - sleep(v').
  std::int64_t mass = 0, s = 0;
  for (int v = 1; v <= last; ++v) {
    mass += sigma.mass(SiteId::spine(v));
    s += sleep_sp[v];
    if (g.has_teeth()) {
      mass += sigma.mass(SiteId::tooth(v));
      s += sleep_th[v];
    }
    const std::int64_t f = sp[v][Instruction::Right] - sp[v + 1][Instruction::Left];
    if (f != f0 + mass - s) fail(SiteId::spine(v), "flow identity to the right fails");
  }
  if (g.has_teeth())
    for (int v = 1; v <= n; ++v) {
      const std::int64_t d = th[v][Instruction::Down] - sp[v][Instruction::Up];
      if (d != sigma.mass(SiteId::tooth(v)) - sleep_th[v]) fail(SiteId::tooth(v), "tooth flow identity fails");
    }
  return rep;
}

/// Net flow from site 0 into site 1 realised by an odometer.
inline std::int64_t flow_into_first(const Odometer& u, const InstructionStack& stack) {
  return -count_kind(stack, SiteId::spine(1), Instruction::Left, u(SiteId::spine(1)));
}

// ---------------------------------------------------------------------------
// Coupled construction

/// One slot of a spine stack: instructions [start, end) beginning with a Left.
struct Slot {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::int64_t ups_before = 0;  // Ups in (m(v), start]
  CombMeta meta;
  std::vector<std::int64_t> chunk_a;  // Up count a at the start of each chunk
  int rights = 0;
};

/// A position of the spine stack together with its coordinates in the coupled construction.
struct SlotPosition {
  std::int64_t index;
  int column;
  std::int64_t a;
  bool sleep;
};

class InvalidPath : public std::invalid_argument {
 public:
  InvalidPath(int step, const std::string& what)
      : std::invalid_argument("transition into step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct InfectionPathOnComb {
  std::vector<Point<2>> cells;  // (r_v, s_v) for v = 0 .. n
  friend bool operator==(const InfectionPathOnComb&, const InfectionPathOnComb&) = default;
};

/// Shapes of comb percolation read off the instruction stacks above the minimal odometer.
/// The shape sequence used between steps v-1 and v comes from the stacks at v and v'.
/// Slots are parsed lazily.
class CoupledConstruction {
 public:
  CoupledConstruction(InstructionStack stack, Configuration sigma, std::int64_t f0)
      : stack_(std::move(stack)), sigma_(std::move(sigma)), f0_(f0),
        m_(minimal_odometer(stack_, sigma_, f0)) {
    if (!stack_.graph().has_teeth()) throw std::invalid_argument("coupled construction needs the comb");
    sites_.resize(stack_.graph().n + 1);
    for (int v = 1; v <= n(); ++v) {
      auto& st = sites_[v];
      st.spine_code = graph().code(SiteId::spine(v));
      st.tooth_code = graph().code(SiteId::tooth(v));
      st.cursor = m_.at_code(st.spine_code);
      st.downs.push_back(m_.at_code(st.tooth_code));
    }
  }

  const Graph& graph() const { return stack_.graph(); }
  int n() const { return stack_.graph().n; }
  const InstructionStack& stack() const { return stack_; }
  const Configuration& sigma() const { return sigma_; }
  std::int64_t f0() const { return f0_; }
  const Odometer& minimal() const { return m_; }

  const Slot& slot(int v, int j) {
    auto& st = site(v);
    while (static_cast<int>(st.slots.size()) <= j) parse_next_slot(st);
    return st.slots[j];
  }

  Shape<2> shape(int v, int j) { return comb_shape(slot(v, j).meta); }

  /// ell_j: total r_max of slots 0 .. j-1, i.e. the Rights in those slots.
  std::int64_t offset(int v, int j) {
    slot(v, j);
    std::int64_t off = 0;
    for (int i = 0; i < j; ++i) off += site(v).slots[i].rights;
    return off;
  }

  /// Index of the a-th Down after m(v') (a = 0 gives m(v') itself).
  std::int64_t down(int v, std::int64_t a) {
    auto& st = site(v);
    while (static_cast<std::int64_t>(st.downs.size()) <= a) {
      std::int64_t i = st.downs.back();
      const std::int64_t stop = i + kIndexSearchGuard;
      do {
        if (++i > stop) throw GuardExceeded("no Down found on tooth stack within guard");
      } while (stack_.at_code(st.tooth_code, i) != Instruction::Down);
      st.downs.push_back(i);
    }
    return st.downs[a];
  }

  /// T attached to Up number a: a Sleep directly before the paired Down.
  bool T(int v, std::int64_t a) {
    return stack_.at_code(site(v).tooth_code, down(v, a) - 1) == Instruction::Sleep;
  }

  std::vector<SlotPosition> positions(int v, int j) {
    const Slot& sl = slot(v, j);
    const int code = site(v).spine_code;
    std::vector<SlotPosition> out;
    int col = 0;
    std::int64_t a = sl.ups_before;
    for (std::int64_t p = sl.start; p < sl.end; ++p) {
      const Instruction ins = stack_.at_code(code, p);
      if (ins == Instruction::Right) ++col;
      if (ins == Instruction::Up) ++a;
      out.push_back({p, col, a, ins == Instruction::Sleep});
    }
    return out;
  }

  /// Spine and tooth lines for slots [first, first+count): '|' between slots, ':' between chunks.
  std::pair<std::string, std::string> render(int v, int first, int count) {
    std::string spine, tooth;
    const int code = site(v).spine_code;
    const int tcode = site(v).tooth_code;
    for (int j = first; j < first + count; ++j) {
      if (j > first) {
        spine += " | ";
        tooth += " | ";
      }
      const Slot& sl = slot(v, j);
      for (std::int64_t p = sl.start; p < sl.end; ++p) {
        const Instruction ins = stack_.at_code(code, p);
        if (ins == Instruction::Up) spine += ':';
        spine += letter(ins);
      }
      for (std::size_t i = 1; i < sl.chunk_a.size(); ++i) {
        tooth += ':';
        const std::int64_t a = sl.chunk_a[i];
        for (std::int64_t q = down(v, a - 1) + 1; q <= down(v, a); ++q) tooth += letter(stack_.at_code(tcode, q));
      }
    }
    return {spine, tooth};
  }

  /// Phi: the infection path of a stable odometer.
  InfectionPathOnComb phi(const Odometer& u) {
    const auto rep = verify_stable(u, stack_, sigma_, f0_);
    if (!rep.stable)
      throw std::invalid_argument("phi requires a stable odometer with the configured flow; first violation at " +
                                  to_string(rep.violations.front().site) + ": " + rep.violations.front().what);
    InfectionPathOnComb path;
    path.cells.push_back({0, 0});
    int s = 0;
    for (int v = 1; v <= n(); ++v) {
      const SiteId sv = SiteId::spine(v), tv = SiteId::tooth(v);
      const std::int64_t r = count_kind(stack_, sv, Instruction::Right, u(sv)) -
                             count_kind(stack_, sv, Instruction::Right, m_(sv));
      s += (stack_.at(sv, u(sv)) == Instruction::Sleep) + (stack_.at(tv, u(tv)) == Instruction::Sleep);
      path.cells.push_back({static_cast<int>(r), s});
    }
    return path;
  }

  /// Throws InvalidPath at the first transition that is not an infection.
  void check_path(const InfectionPathOnComb& path) {
    if (static_cast<int>(path.cells.size()) != n() + 1) throw InvalidPath(0, "path must have n+1 cells");
    if (path.cells[0] != Point<2>{0, 0}) throw InvalidPath(0, "path must start at the origin");
    for (int v = 1; v <= n(); ++v) {
      const auto& a = path.cells[v - 1];
      const auto& b = path.cells[v];
      const int j = a[0] + a[1];
      if (a[0] < 0 || a[1] < 0) throw InvalidPath(v - 1, "negative coordinate");
      const Point<2> rel{static_cast<int>(b[0] - offset(v, j)), b[1] - a[1]};
      if (rel[0] < 0 || rel[1] < 0 || !shape(v, j).contains(rel))
        throw InvalidPath(v, "cell (" + std::to_string(b[0]) + "," + std::to_string(b[1]) + ") is not infected");
    }
  }

  /// The inverse of Phi: a stable odometer mapping to `path`.
  Odometer odometer_from_path(const InfectionPathOnComb& path) {
    check_path(path);
    Odometer u(graph());
    for (int v = 1; v <= n(); ++v) {
      const auto& a = path.cells[v - 1];
      const auto& b = path.cells[v];
      const int j = a[0] + a[1];
      const int col = static_cast<int>(b[0] - offset(v, j));
      const int ds = b[1] - a[1];
      const auto pos = positions(v, j);
      std::optional<std::pair<std::int64_t, std::int64_t>> pick;
      auto first = [&](auto pred, bool tooth_sleeps) {
        for (const auto& p : pos)
          if (p.column == col && pred(p)) {
            pick = {p.index, tooth_sleeps ? down(v, p.a) - 1 : down(v, p.a)};
            return;
          }
      };
      if (ds == 0) {
        first([](const SlotPosition& p) { return !p.sleep; }, false);
      } else if (ds == 1) {
        first([](const SlotPosition& p) { return p.sleep; }, false);
        if (!pick) first([&](const SlotPosition& p) { return !p.sleep && T(v, p.a); }, true);
      } else if (ds == 2) {
        first([&](const SlotPosition& p) { return p.sleep && T(v, p.a); }, true);
      }
      if (!pick) throw InvalidPath(v, "no instruction position realises this infection");
      u.set(SiteId::spine(v), pick->first);
      u.set(SiteId::tooth(v), pick->second);
    }
    return u;
  }

 private:
  struct SiteParse {
    int spine_code = 0;
    int tooth_code = 0;
    std::int64_t cursor = 0;  // start of the next unparsed slot (a Left)
    std::int64_t ups = 0;
    std::vector<Slot> slots;
    std::vector<std::int64_t> downs;
  };

  SiteParse& site(int v) {
    if (v < 1 || v > n()) throw InvalidSite("coupled construction has no site " + std::to_string(v));
    return sites_[v];
  }

  void parse_next_slot(SiteParse& st) {
    Slot sl;
    sl.start = st.cursor;
    sl.ups_before = st.ups;
    CombChunk cur{1, false, {0}};
    sl.chunk_a.push_back(st.ups);
    std::int64_t p = sl.start;
    const std::int64_t stop = sl.start + kIndexSearchGuard;
    for (;;) {
      const Instruction ins = p == sl.start ? Instruction::Left : stack_.at_code(st.spine_code, p);
      if (p != sl.start && ins == Instruction::Left) break;
      if (ins == Instruction::Sleep) {
        cur.S.back() = 1;
      } else if (ins == Instruction::Right) {
        ++cur.R;
        cur.S.push_back(0);
        ++sl.rights;
      } else if (ins == Instruction::Up) {
        sl.meta.chunks.push_back(cur);
        ++st.ups;
        cur = CombChunk{1, false, {0}};
        sl.chunk_a.push_back(st.ups);
      }
      if (++p > stop) throw GuardExceeded("slot longer than index guard");
    }
    sl.meta.chunks.push_back(cur);
    sl.end = p;
    st.cursor = p;
    const int v = static_cast<int>(&st - sites_.data());
    for (std::size_t i = 0; i < sl.meta.chunks.size(); ++i) sl.meta.chunks[i].T = T(v, sl.chunk_a[i]);
    st.slots.push_back(std::move(sl));
  }

  InstructionStack stack_;
  Configuration sigma_;
  std::int64_t f0_;
  Odometer m_;
  std::vector<SiteParse> sites_;
};

/// Exposes a coupled construction as a shape law so that layer percolation can run on it:
/// step k uses the shapes parsed at spine site k+1.
class CoupledConstructionLaw final : public ShapeLaw<2> {
  struct Src final : ShapeSource<2> {
    Src(CoupledConstruction* cc, int v) : cc(cc), v(v) {}
    Shape<2> next() override {
      if (v < 1 || v > cc->n()) throw std::out_of_range("coupled construction has no step " + std::to_string(v - 1));
      return cc->shape(v, j++);
    }
    CoupledConstruction* cc;
    int v;
    int j = 0;
  };

 public:
  explicit CoupledConstructionLaw(CoupledConstruction& cc) : cc_(&cc) {}
  std::unique_ptr<ShapeSource<2>> start(std::uint64_t, int step) const override {
    return std::make_unique<Src>(cc_, step + 1);
  }
  std::string name() const override { return "coupled-construction"; }

 private:
  CoupledConstruction* cc_;
};

}  // namespace combarw
