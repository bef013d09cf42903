#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace ihcube {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned box with closed intervals, one per indexed dimension. Used
/// both as a query Range and as a tree node's minimum bounding rectangle.
class Rect {
 public:
  Rect() = default;
  explicit Rect(std::size_t dims) : iv_(dims) {}
  explicit Rect(std::vector<Interval> intervals) : iv_(std::move(intervals)) {}

  /// The empty box: lo = +inf, hi = -inf so that the first expand() sets it.
  static Rect empty(std::size_t dims) {
    Rect r(dims);
    for (auto& i : r.iv_) {
      i.lo = std::numeric_limits<double>::infinity();
      i.hi = -std::numeric_limits<double>::infinity();
    }
    return r;
  }
  static Rect point(std::span<const double> p) {
    Rect r(p.size());
    for (std::size_t d = 0; d < p.size(); ++d) r.iv_[d] = {p[d], p[d]};
    return r;
  }

  std::size_t dims() const { return iv_.size(); }
  Interval& operator[](std::size_t d) { return iv_[d]; }
  const Interval& operator[](std::size_t d) const { return iv_[d]; }
  const std::vector<Interval>& intervals() const { return iv_; }

  bool is_empty() const {
    for (const auto& i : iv_) {
      if (i.lo > i.hi) return true;
    }
    return iv_.empty();
  }

  bool contains(std::span<const double> p) const {
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      if (!iv_[d].contains(p[d])) return false;
    }
    return true;
  }
  bool contains(const Rect& o) const {
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      if (o.iv_[d].lo < iv_[d].lo || o.iv_[d].hi > iv_[d].hi) return false;
    }
    return true;
  }
  bool intersects(const Rect& o) const {
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      if (!iv_[d].intersects(o.iv_[d])) return false;
    }
    return true;
  }

  void expand(std::span<const double> p) {
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      iv_[d].lo = std::min(iv_[d].lo, p[d]);
      iv_[d].hi = std::max(iv_[d].hi, p[d]);
    }
  }
  void expand(const Rect& o) {
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      iv_[d].lo = std::min(iv_[d].lo, o.iv_[d].lo);
      iv_[d].hi = std::max(iv_[d].hi, o.iv_[d].hi);
    }
  }

  Rect intersection(const Rect& o) const {
    Rect r(iv_.size());
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      r.iv_[d] = {std::max(iv_[d].lo, o.iv_[d].lo),
                  std::min(iv_[d].hi, o.iv_[d].hi)};
    }
    return r;
  }

  /// Volume with each axis multiplied by `scale[d]` (scale units per value).
  double volume(std::span<const double> scale) const {
    double v = 1.0;
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      v *= std::max(0.0, iv_[d].length()) * scale[d];
    }
    return v;
  }
  double margin(std::span<const double> scale) const {
    double m = 0.0;
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      m += std::max(0.0, iv_[d].length()) * scale[d];
    }
    return m;
  }
  double overlap(const Rect& o, std::span<const double> scale) const {
    double v = 1.0;
    for (std::size_t d = 0; d < iv_.size(); ++d) {
      double len = std::min(iv_[d].hi, o.iv_[d].hi) -
                   std::max(iv_[d].lo, o.iv_[d].lo);
      if (len <= 0.0) return 0.0;
      v *= len * scale[d];
    }
    return v;
  }

  friend bool operator==(const Rect&, const Rect&) = default;

 private:
  std::vector<Interval> iv_;
};

}  // namespace ihcube
