#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "maxentos/error.hpp"

namespace maxentos {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo;
  double hi;

  bool contains(double t) const { return lo < t && t < hi; }
  double length() const { return hi - lo; }
  /// Arithmetic midpoint; for a half-line a finite interior point is used instead.
  double midpoint() const {
    const bool fl = std::isfinite(lo);
    const bool fh = std::isfinite(hi);
    if (fl && fh) return 0.5 * (lo + hi);
    if (fl) return lo + 1.0;
    if (fh) return hi - 1.0;
    return 0.0;
  }
};

/// Finite, sorted union of pairwise disjoint open intervals.
class IntervalSet {
 public:
  IntervalSet() = default;

  explicit IntervalSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
      if (!(intervals_[k].lo < intervals_[k].hi)) throw InvalidInput("IntervalSet: empty or reversed interval");
      if (k > 0 && intervals_[k - 1].hi > intervals_[k].lo) {
        throw InvalidInput("IntervalSet: intervals must be sorted and disjoint");
      }
    }
  }

  std::size_t size() const { return intervals_.size(); }
  bool empty() const { return intervals_.empty(); }
  const Interval& operator[](std::size_t k) const { return intervals_[k]; }
  auto begin() const { return intervals_.begin(); }
  auto end() const { return intervals_.end(); }

  /// Index of the interval containing t (open membership).
  std::optional<std::size_t> find(double t) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                               [](double v, const Interval& iv) { return v < iv.hi; });
    if (it == intervals_.end() || !it->contains(t)) return std::nullopt;
    return static_cast<std::size_t>(it - intervals_.begin());
  }

  bool contains(double t) const { return find(t).has_value(); }

  /// True iff the open gap (a, b) is a subset of the set. An empty gap
  /// (a >= b) is trivially contained. Interval ends are widened by `tol`.
  bool contains_gap(double a, double b, double tol = 0.0) const {
    if (!(a < b)) return true;
    for (const auto& iv : intervals_) {
      if (iv.lo - tol <= a && b <= iv.hi + tol) return true;
    }
    return false;
  }

  double measure() const {
    double m = 0.0;
    for (const auto& iv : intervals_) m += iv.length();
    return m;
  }

  /// Closed pieces of the complement within [lo, hi] (ends may be infinite).
  std::vector<Interval> complement(double lo, double hi) const {
    std::vector<Interval> out;
    double cursor = lo;
    for (const auto& iv : intervals_) {
      if (iv.lo >= cursor) out.push_back({cursor, std::min(iv.lo, hi)});
      cursor = std::max(cursor, iv.hi);
    }
    if (cursor <= hi) out.push_back({cursor, hi});
    return out;
  }

 private:
  std::vector<Interval> intervals_;
};

/// Lebesgue measure of a union of possibly overlapping closed intervals.
inline double union_measure(std::vector<Interval> pieces) {
  std::sort(pieces.begin(), pieces.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  double total = 0.0;
  bool open = false;
  double cur_lo = 0.0, cur_hi = 0.0;
  for (const auto& p : pieces) {
    if (!(p.lo <= p.hi)) continue;
    if (!open) {
      cur_lo = p.lo;
      cur_hi = p.hi;
      open = true;
    } else if (p.lo <= cur_hi) {
      cur_hi = std::max(cur_hi, p.hi);
    } else {
      total += cur_hi - cur_lo;
      cur_lo = p.lo;
      cur_hi = p.hi;
    }
  }
  if (open) total += cur_hi - cur_lo;
  return total;
}

}  // namespace maxentos
