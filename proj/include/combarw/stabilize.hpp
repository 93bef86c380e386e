#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "combarw/configuration.hpp"
#include "combarw/errors.hpp"
#include "combarw/instructions.hpp"
#include "combarw/rng.hpp"

namespace combarw {

enum class Policy : std::uint8_t { Fifo, Lifo, Random };

inline constexpr std::uint64_t kDefaultBudget = 1'000'000'000ULL;

struct StabilizationResult {
  Configuration final;
  Odometer odometer;
  std::int64_t sink_left = 0;
  std::int64_t sink_right = 0;
  std::uint64_t instructions = 0;
};

/// Stateful toppling machine over one instruction stack. The odometer persists across
/// calls, so repeated add-then-settle cycles consume fresh instructions each time
/// (the driven-dissipative chain).
class Stabilizer {
 public:
  Stabilizer(Configuration config, const InstructionStack& stack)
      : stack_(stack), graph_(stack.graph()), config_(std::move(config)), odometer_(stack.graph()),
        queued_(graph_.site_count(), 0) {
    if (!(config_.graph() == graph_)) throw std::invalid_argument("configuration and stack graphs differ");
  }

  void add_active(SiteId s) {
    auto& st = config_.at_code(graph_.code(s));
    st = st == kSleeper ? 2 : st + 1;
  }

  /// Topple unstable sites until stable. With `hold_teeth`, a tooth is only toppled while it
  /// holds two or more active particles, so each tooth keeps one active particle in place.
  void settle(Policy policy = Policy::Fifo, std::uint64_t policy_seed = 0, bool hold_teeth = false,
              std::uint64_t budget = kDefaultBudget) {
    Rng rng = make_rng(policy_seed);
    const int sites = graph_.site_count();
    const int n = graph_.n;
    auto threshold = [&](int c) { return (hold_teeth && c >= n) ? 2 : 1; };
    for (int c = 0; c < sites; ++c)
      if (config_.at_code(c) >= threshold(c)) push(c);

    std::uint64_t used = 0;
    while (!pending_.empty()) {
      int c;
      if (policy == Policy::Fifo) {
        c = pending_.front();
        pending_.pop_front();
      } else if (policy == Policy::Lifo) {
        c = pending_.back();
        pending_.pop_back();
      } else {
        std::size_t k = std::uniform_int_distribution<std::size_t>(0, pending_.size() - 1)(rng);
        c = pending_[k];
        pending_[k] = pending_.back();
        pending_.pop_back();
      }
      queued_[c] = 0;
      SiteState& st = config_.at_code(c);
      if (st < threshold(c)) continue;
      if (++used > budget)
        throw GuardExceeded("instruction budget of " + std::to_string(budget) + " exceeded");
      const Instruction ins = stack_.at_code(c, ++odometer_.at_code(c));
      if (ins == Instruction::Sleep) {
        if (st == 1) st = kSleeper;
      } else {
        --st;
        int target = -1;
        if (c >= n) {
          target = c - n;
        } else if (ins == Instruction::Up) {
          target = c + n;
        } else {
          const int v = c + 1 + (ins == Instruction::Right ? 1 : -1);
          if (v == 0) ++sink_left_;
          else if (v == n + 1) ++sink_right_;
          else target = v - 1;
        }
        if (target >= 0) {
          SiteState& ts = config_.at_code(target);
          ts = ts == kSleeper ? 2 : ts + 1;
          if (ts >= threshold(target)) push(target);
        }
      }
      if (st >= threshold(c)) push(c);
    }
    instructions_ += used;
  }

  const Configuration& configuration() const { return config_; }
  const Odometer& odometer() const { return odometer_; }
  std::int64_t sink_left() const { return sink_left_; }
  std::int64_t sink_right() const { return sink_right_; }
  std::uint64_t instructions() const { return instructions_; }
  const InstructionStack& stack() const { return stack_; }

  StabilizationResult result() const { return {config_, odometer_, sink_left_, sink_right_, instructions_}; }

 private:
  void push(int c) {
    if (queued_[c]) return;
    queued_[c] = 1;
    pending_.push_back(c);
  }

  InstructionStack stack_;
  Graph graph_;
  Configuration config_;
  Odometer odometer_;
  std::vector<char> queued_;
  std::deque<int> pending_;
  std::int64_t sink_left_ = 0;
  std::int64_t sink_right_ = 0;
  std::uint64_t instructions_ = 0;
};

inline StabilizationResult stabilize(const Configuration& config, const InstructionStack& stack,
                                     Policy policy = Policy::Fifo, std::uint64_t policy_seed = 0,
                                     std::uint64_t budget = kDefaultBudget) {
  Stabilizer s(config, stack);
  s.settle(policy, policy_seed, false, budget);
  return s.result();
}

/// Stabilize one active particle per non-sink vertex; the result is an exact draw from the
/// stationary law of the driven-dissipative chain.
inline StabilizationResult exact_stationary_sample(const Graph& g, double lambda, std::uint64_t seed) {
  return stabilize(Configuration::ones(g), InstructionStack(g, lambda, seed));
}

struct DensityPoint {
  std::int64_t step;
  std::int64_t total;  // S
  std::int64_t teeth;  // T
  std::int64_t spine;  // B
};

struct Driving {
  enum class Kind : std::uint8_t { Uniform, FixedSite } kind = Kind::Uniform;
  SiteId site = SiteId::spine(1);
};

/// Driven-dissipative chain from the empty configuration: each step adds one active
/// particle (uniform over non-sink vertices, or at a fixed site) and stabilizes.
inline std::vector<DensityPoint> drive_dissipate(const Graph& g, double lambda, std::int64_t steps,
                                                 Driving driving, std::uint64_t seed) {
  std::vector<DensityPoint> trace;
  if (steps <= 0) return trace;
  trace.reserve(static_cast<std::size_t>(steps));
  Stabilizer st(Configuration(g), InstructionStack(g, lambda, derive_seed(seed, 0)));
  Rng rng = make_rng(derive_seed(seed, 1));
  std::uniform_int_distribution<int> pick(0, g.site_count() - 1);
  for (std::int64_t k = 1; k <= steps; ++k) {
    const SiteId s = driving.kind == Driving::Kind::Uniform ? g.site(pick(rng)) : driving.site;
    st.add_active(s);
    st.settle();
    const auto& c = st.configuration();
    const auto b = c.sleepers_on_spine();
    const auto t = c.sleepers_on_teeth();
    trace.push_back({k, b + t, t, b});
  }
  return trace;
}

struct PartialStabilization {
  Configuration spine;        // tau: spine restriction (teeth entries zeroed)
  std::int64_t tau_size = 0;  // |tau|
  std::int64_t final_sleepers = 0;  // S after resuming to full stabilization
  std::int64_t teeth_active_after_first_phase = 0;
  bool every_tooth_holds_one = false;
};

/// Stabilize the spine of the one-per-site comb configuration while teeth keep their
/// particle (a tooth topples only while holding two), then resume the full stabilization
/// on the same stacks.
inline PartialStabilization partial_spine_stabilize(int n, double lambda, std::uint64_t seed,
                                                    std::optional<StabilizationResult>* full = nullptr) {
  const Graph g = Graph::comb(n);
  Stabilizer st(Configuration::ones(g), InstructionStack(g, lambda, seed));
  st.settle(Policy::Fifo, 0, true);
  PartialStabilization out{Configuration(g)};
  bool ok = true;
  for (int v = 1; v <= n; ++v) {
    const SiteState sp = st.configuration()(SiteId::spine(v));
    out.spine.set(SiteId::spine(v), sp);
    out.tau_size += Configuration::mass(sp);
    const SiteState tt = st.configuration()(SiteId::tooth(v));
    out.teeth_active_after_first_phase += tt > 0 ? tt : 0;
    ok = ok && tt == 1;
  }
  out.every_tooth_holds_one = ok;
  st.settle();
  out.final_sleepers = st.configuration().sleepers();
  if (full) *full = st.result();
  return out;
}

}  // namespace combarw
