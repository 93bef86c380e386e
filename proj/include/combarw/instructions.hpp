#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "combarw/errors.hpp"
#include "combarw/rng.hpp"
#include "combarw/sites.hpp"

namespace combarw {

enum class Instruction : std::uint8_t { Sleep, Left, Right, Up, Down };

inline constexpr std::array<Instruction, 5> kAllInstructions = {
    Instruction::Sleep, Instruction::Left, Instruction::Right, Instruction::Up, Instruction::Down};

constexpr char letter(Instruction i) {
  switch (i) {
    case Instruction::Sleep: return 'S';
    case Instruction::Left: return 'L';
    case Instruction::Right: return 'R';
    case Instruction::Up: return 'U';
    case Instruction::Down: return 'D';
  }
  return '?';
}

inline Instruction instruction_from_letter(char c) {
  switch (c) {
    case 'S': return Instruction::Sleep;
    case 'L': return Instruction::Left;
    case 'R': return Instruction::Right;
    case 'U': return Instruction::Up;
    case 'D': return Instruction::Down;
    default: throw std::invalid_argument(std::string("unknown instruction letter '") + c + "'");
  }
}

/// Whether `i` may appear on stacks of `site` in graph `g`.
constexpr bool allowed_at(const Graph& g, SiteId site, Instruction i) {
  if (site.is_tooth()) return i == Instruction::Sleep || i == Instruction::Down;
  if (i == Instruction::Down) return false;
  if (i == Instruction::Up) return g.has_teeth();
  return true;
}

/// The two-sided sitewise instruction stacks instr_v(k), k in Z, for every non-sink vertex.
///
/// Index 0 is forced (Left on the spine, Down on teeth). Every other entry is a pure
/// function of (seed, site, index): one uniform variate decides Sleep with probability
/// lambda/(1+lambda), otherwise a uniform jump from the site's jump set. Nothing is
/// stored, so both directions extend without bound. Individual entries may be pinned
/// through overrides, which is how hand-written listings are replayed.
class InstructionStack {
 public:
  InstructionStack(Graph graph, double lambda, std::uint64_t seed)
      : graph_(graph), lambda_(lambda), sleep_p_(sleep_probability(lambda)), seed_(seed) {
    if (!(lambda > 0.0)) throw std::invalid_argument("sleep rate lambda must be positive");
  }

  const Graph& graph() const { return graph_; }
  double lambda() const { return lambda_; }
  std::uint64_t seed() const { return seed_; }

  Instruction at(SiteId site, std::int64_t index) const {
    if (site.is_sink() || !graph_.contains(site))
      throw InvalidSite("no instruction stack at site " + to_string(site));
    return at_code(graph_.code(site), index);
  }

  /// Fast path keyed by the dense site code; no validation.
  Instruction at_code(int code, std::int64_t index) const {
    const bool tooth = code >= graph_.n;
    if (index == 0) return tooth ? Instruction::Down : Instruction::Left;
    if (overrides_) {
      auto it = overrides_->find({code, index});
      if (it != overrides_->end()) return it->second;
    }
    const double u = to_unit(mix(seed_ ^ (static_cast<std::uint64_t>(code) << 40), static_cast<std::uint64_t>(index)));
    if (u < sleep_p_) return Instruction::Sleep;
    if (tooth) return Instruction::Down;
    const int jumps = graph_.has_teeth() ? 3 : 2;
    int k = static_cast<int>((u - sleep_p_) / (1.0 - sleep_p_) * jumps);
    if (k >= jumps) k = jumps - 1;
    static constexpr Instruction kJumps[3] = {Instruction::Left, Instruction::Right, Instruction::Up};
    return kJumps[k];
  }

  /// Copy of this stack with instr_site(index) pinned to `value`.
  InstructionStack with(SiteId site, std::int64_t index, Instruction value) const {
    InstructionStack copy = *this;
    copy.pin(site, index, value);
    return copy;
  }

  /// Copy with a run of instructions pinned from `first` onward, given as letters
  /// (S, L, R, U, D). Whitespace and the separators '|' ':' are ignored.
  InstructionStack with_listing(SiteId site, std::int64_t first, std::string_view letters) const {
    InstructionStack copy = *this;
    std::int64_t k = first;
    for (char c : letters) {
      if (c == ' ' || c == '|' || c == ':') continue;
      copy.pin(site, k++, instruction_from_letter(c));
    }
    return copy;
  }

 private:
  void pin(SiteId site, std::int64_t index, Instruction value) {
    if (site.is_sink() || !graph_.contains(site))
      throw InvalidSite("cannot pin an instruction at site " + to_string(site));
    if (!allowed_at(graph_, site, value))
      throw std::invalid_argument(std::string("instruction ") + letter(value) + " not allowed at " + to_string(site));
    const Instruction forced = site.is_tooth() ? Instruction::Down : Instruction::Left;
    if (index == 0) {
      if (value != forced) throw std::invalid_argument("index 0 is fixed at " + to_string(site));
      return;
    }
    auto next = overrides_ ? std::make_shared<OverrideMap>(*overrides_) : std::make_shared<OverrideMap>();
    (*next)[{graph_.code(site), index}] = value;
    overrides_ = std::move(next);
  }

  using OverrideMap = std::map<std::pair<int, std::int64_t>, Instruction>;

  Graph graph_;
  double lambda_;
  double sleep_p_;
  std::uint64_t seed_;
  std::shared_ptr<const OverrideMap> overrides_;
};

/// Signed count of `kind` among the instructions used by odometer value `u` at `site`:
/// sum over 1..u when u >= 0, and minus the count over u+1..0 when u < 0, so that the
/// count is translation-consistent (count(u) - count(u-1) = [instr(u) == kind] for all u).
/// Zero at sinks.
inline std::int64_t count_kind(const InstructionStack& stack, SiteId site, Instruction kind, std::int64_t u) {
  if (site.is_sink()) return 0;
  const int code = stack.graph().code(site);
  std::int64_t c = 0;
  if (u >= 0) {
    for (std::int64_t i = 1; i <= u; ++i) c += stack.at_code(code, i) == kind;
    return c;
  }
  for (std::int64_t i = u + 1; i <= 0; ++i) c += stack.at_code(code, i) == kind;
  return -c;
}

/// All five signed counts at once.
struct InstructionCounts {
  std::array<std::int64_t, 5> by_kind{};
  std::int64_t operator[](Instruction k) const { return by_kind[static_cast<int>(k)]; }
};

inline InstructionCounts count_all(const InstructionStack& stack, SiteId site, std::int64_t u) {
  InstructionCounts out;
  if (site.is_sink()) return out;
  const int code = stack.graph().code(site);
  if (u >= 0) {
    for (std::int64_t i = 1; i <= u; ++i) ++out.by_kind[static_cast<int>(stack.at_code(code, i))];
  } else {
    for (std::int64_t i = u + 1; i <= 0; ++i) --out.by_kind[static_cast<int>(stack.at_code(code, i))];
  }
  return out;
}

/// Integer-valued function on the vertices, identically zero at the sinks.
class Odometer {
 public:
  explicit Odometer(Graph graph) : graph_(graph), values_(graph.site_count(), 0) {}

  const Graph& graph() const { return graph_; }

  std::int64_t operator()(SiteId s) const {
    if (s.is_sink()) return 0;
    return values_[graph_.code(s)];
  }

  void set(SiteId s, std::int64_t value) {
    if (s.is_sink()) {
      if (value != 0) throw InvalidSite("odometer is zero at the sinks");
      return;
    }
    values_[graph_.code(s)] = value;
  }

  std::int64_t& at_code(int code) { return values_[code]; }
  std::int64_t at_code(int code) const { return values_[code]; }
  const std::vector<std::int64_t>& values() const { return values_; }

  friend bool operator==(const Odometer&, const Odometer&) = default;

 private:
  Graph graph_;
  std::vector<std::int64_t> values_;
};

}  // namespace combarw
