#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "combarw/errors.hpp"

namespace combarw {

enum class GraphKind : std::uint8_t { Comb, Interval };

enum class SiteKind : std::uint8_t { Spine, Tooth, Sink };

/// A vertex of the comb C_n or of the interval [0, n+1]. Teeth carry the index
/// of the spine vertex they hang from; sinks are the spine-side endpoints 0 and n+1.
struct SiteId {
  SiteKind kind = SiteKind::Spine;
  int index = 0;

  static constexpr SiteId spine(int v) { return {SiteKind::Spine, v}; }
  static constexpr SiteId tooth(int v) { return {SiteKind::Tooth, v}; }
  static constexpr SiteId sink(int v) { return {SiteKind::Sink, v}; }

  constexpr bool is_sink() const { return kind == SiteKind::Sink; }
  constexpr bool is_tooth() const { return kind == SiteKind::Tooth; }
  constexpr bool is_spine() const { return kind == SiteKind::Spine; }

  friend constexpr auto operator<=>(const SiteId&, const SiteId&) = default;
};

inline std::string to_string(SiteId s) {
  switch (s.kind) {
    case SiteKind::Spine: return std::to_string(s.index);
    case SiteKind::Tooth: return std::to_string(s.index) + "'";
    case SiteKind::Sink: return "sink" + std::to_string(s.index);
  }
  return "?";
}

/// Interval [1, n] with sinks 0 and n+1, optionally with one tooth per spine vertex.
struct Graph {
  GraphKind kind = GraphKind::Comb;
  int n = 1;

  static Graph comb(int n) { return checked({GraphKind::Comb, n}); }
  static Graph interval(int n) { return checked({GraphKind::Interval, n}); }

  constexpr bool has_teeth() const { return kind == GraphKind::Comb; }

  /// Number of non-sink vertices.
  constexpr int site_count() const { return has_teeth() ? 2 * n : n; }

  /// Spine coordinate with sink normalisation: 0 and n+1 become sinks.
  constexpr SiteId spine_or_sink(int v) const {
    return (v <= 0 || v >= n + 1) ? SiteId::sink(v <= 0 ? 0 : n + 1) : SiteId::spine(v);
  }

  constexpr bool contains(SiteId s) const {
    switch (s.kind) {
      case SiteKind::Spine: return s.index >= 1 && s.index <= n;
      case SiteKind::Tooth: return has_teeth() && s.index >= 1 && s.index <= n;
      case SiteKind::Sink: return s.index == 0 || s.index == n + 1;
    }
    return false;
  }

  /// Dense code in [0, site_count()) for non-sink vertices: spine v -> v-1, tooth v' -> n+v-1.
  int code(SiteId s) const {
    if (s.is_sink() || !contains(s)) throw InvalidSite("no dense code for site " + to_string(s));
    return s.is_spine() ? s.index - 1 : n + s.index - 1;
  }

  constexpr SiteId site(int code) const {
    return code < n ? SiteId::spine(code + 1) : SiteId::tooth(code - n + 1);
  }

  friend constexpr bool operator==(const Graph&, const Graph&) = default;

 private:
  static Graph checked(Graph g) {
    if (g.n < 1) throw std::invalid_argument("graph length n must be positive");
    return g;
  }
};

}  // namespace combarw
