#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>

namespace ihcube {

/// Bin of `x` against sorted `edges` (n + 1 edges describe n bins). Bins are
/// half-open [e_i, e_{i+1}); the last bin is closed on the right when
/// `closed_last` is set. Returns nullopt when x falls outside.
///
/// This is the single membership rule shared by local histograms, the scan
/// oracle and the workload generators.
inline std::optional<std::size_t> locate_bin(std::span<const double> edges,
                                             double x, bool closed_last) {
  if (edges.size() < 2) return std::nullopt;
  if (x < edges.front()) return std::nullopt;
  if (x >= edges.back()) {
    if (closed_last && x == edges.back()) return edges.size() - 2;
    return std::nullopt;
  }
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

/// Membership in a query interval: [lo, hi), closed at hi when hi is the
/// domain maximum. Degenerate intervals are empty.
inline bool in_interval(double x, double lo, double hi, double domain_max) {
  if (!(lo < hi) || x < lo) return false;
  return x < hi || (hi == domain_max && x == hi);
}

/// Equi-width binning over a local value range; degenerate when lo == hi, in
/// which case every value equal to lo lands in bin 0.
struct LocalBinning {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t bins = 0;

  double edge(std::size_t i) const {
    if (i == 0) return lo;
    if (i >= bins) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }

  std::size_t bin_of(double x) const {
    if (bins == 0 || !(hi > lo) || x <= lo) return 0;
    if (x >= hi) return bins - 1;
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) *
                                      static_cast<double>(bins));
    b = std::min(b, bins - 1);
    while (b + 1 < bins && edge(b + 1) <= x) ++b;
    while (b > 0 && edge(b) > x) --b;
    return b;
  }

  friend bool operator==(const LocalBinning&, const LocalBinning&) = default;
};

}  // namespace ihcube
