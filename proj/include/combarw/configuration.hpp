#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "combarw/errors.hpp"
#include "combarw/sites.hpp"

namespace combarw {

/// Per-site particle state: kSleeper for a single sleeping particle, otherwise the
/// number of active particles (0 = empty).
using SiteState = std::int32_t;
inline constexpr SiteState kSleeper = -1;

/// Particle configuration on the non-sink vertices of a graph.
class Configuration {
 public:
  explicit Configuration(Graph graph) : graph_(graph), state_(graph.site_count(), 0) {}

  /// One active particle on every non-sink vertex.
  static Configuration ones(Graph graph) {
    Configuration c(graph);
    for (auto& s : c.state_) s = 1;
    return c;
  }

  const Graph& graph() const { return graph_; }

  SiteState operator()(SiteId s) const { return state_[graph_.code(s)]; }
  SiteState at_code(int code) const { return state_[code]; }
  SiteState& at_code(int code) { return state_[code]; }

  void set(SiteId s, SiteState value) {
    if (value < kSleeper) throw std::invalid_argument("negative particle count");
    state_[graph_.code(s)] = value;
  }

  /// |sigma(v)|, with a sleeper counting as one particle.
  static std::int64_t mass(SiteState s) { return s == kSleeper ? 1 : s; }
  std::int64_t mass(SiteId s) const { return s.is_sink() ? 0 : mass((*this)(s)); }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto s : state_) t += mass(s);
    return t;
  }

  bool is_stable() const {
    for (auto s : state_)
      if (s > 0) return false;
    return true;
  }

  std::int64_t sleepers_on_spine() const {
    std::int64_t t = 0;
    for (int c = 0; c < graph_.n; ++c) t += state_[c] == kSleeper;
    return t;
  }
  std::int64_t sleepers_on_teeth() const {
    std::int64_t t = 0;
    for (int c = graph_.n; c < graph_.site_count(); ++c) t += state_[c] == kSleeper;
    return t;
  }
  std::int64_t sleepers() const { return sleepers_on_spine() + sleepers_on_teeth(); }

  const std::vector<SiteState>& states() const { return state_; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  Graph graph_;
  std::vector<SiteState> state_;
};

}  // namespace combarw
