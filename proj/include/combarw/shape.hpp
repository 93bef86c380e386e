#pragma once

#include <algorithm>
#include <array>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace combarw {

/// A point (r, s_1, ..., s_{D-1}) of N^D.
template <int D>
using Point = std::array<int, D>;

template <int D>
constexpr int s_sum(const Point<D>& p) {
  int t = 0;
  for (int i = 1; i < D; ++i) t += p[i];
  return t;
}

template <int D>
constexpr int diagonal(const Point<D>& p) {
  return p[0] + s_sum<D>(p);
}

/// Non-empty finite subset of N^D, kept sorted and duplicate free.
template <int D>
class Shape {
 public:
  Shape() : points_{Point<D>{}}, r_max_(0) {}

  explicit Shape(std::vector<Point<D>> pts) : points_(std::move(pts)) {
    if (points_.empty()) throw std::invalid_argument("shape must be non-empty");
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    r_max_ = 0;
    for (const auto& p : points_) {
      for (int c : p)
        if (c < 0) throw std::invalid_argument("shape coordinates must be nonnegative");
      r_max_ = std::max(r_max_, p[0]);
    }
  }

  Shape(std::initializer_list<Point<D>> pts) : Shape(std::vector<Point<D>>(pts)) {}

  const std::vector<Point<D>>& points() const { return points_; }
  int r_max() const { return r_max_; }
  std::size_t size() const { return points_.size(); }

  bool contains(const Point<D>& p) const { return std::binary_search(points_.begin(), points_.end(), p); }

  int s_max() const {
    int m = 0;
    for (const auto& p : points_) m = std::max(m, s_sum<D>(p));
    return m;
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<Point<D>> points_;
  int r_max_;
};

/// ASCII rendering of a 2-d shape, top row first; '#' marks a cell.
inline std::string render(const Shape<2>& shape) {
  const int w = shape.r_max() + 1;
  const int h = shape.s_max() + 1;
  std::string out;
  for (int s = h - 1; s >= 0; --s) {
    for (int r = 0; r < w; ++r) out += shape.contains({r, s}) ? '#' : '.';
    out += '\n';
  }
  return out;
}

template <int D>
Point<2> project(const Point<D>& p) {
  return {p[0], s_sum<D>(p)};
}

template <int D>
Shape<2> project(const Shape<D>& s) {
  std::vector<Point<2>> pts;
  pts.reserve(s.size());
  for (const auto& p : s.points()) pts.push_back(project<D>(p));
  return Shape<2>(std::move(pts));
}

}  // namespace combarw
