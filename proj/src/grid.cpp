#include "ihcube/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ihcube/error.hpp"

namespace ihcube {

std::string to_string(BinStrategy s) {
  switch (s) {
    case BinStrategy::equi_width: return "equi_width";
    case BinStrategy::equi_data: return "equi_data";
    case BinStrategy::log: return "log";
    case BinStrategy::explicit_edges: return "explicit";
  }
  return "equi_width";
}

std::optional<BinStrategy> parse_bin_strategy(const std::string& s) {
  if (s == "equi_width") return BinStrategy::equi_width;
  if (s == "equi_data") return BinStrategy::equi_data;
  if (s == "log") return BinStrategy::log;
  if (s == "explicit") return BinStrategy::explicit_edges;
  return std::nullopt;
}

std::vector<double> equi_width_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ValidationError("bins", "must be >= 1");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  e.back() = hi;
  return e;
}

std::vector<double> log_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ValidationError("bins", "must be >= 1");
  if (!(lo > 0.0) || !(hi > lo)) {
    throw ValidationError("strategy", "log binning needs 0 < lo < hi");
  }
  const double a = std::log10(lo), b = std::log10(hi);
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(bins));
  }
  e.front() = lo;
  e.back() = hi;
  return e;
}

std::vector<double> quantile_edges(std::span<const double> fine_edges,
                                   std::span<const double> mass,
                                   std::size_t bins) {
  const double lo = fine_edges.front(), hi = fine_edges.back();
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0.0)) return equi_width_edges(lo, hi, bins);
  std::vector<double> e{lo};
  double cum = 0.0;
  std::size_t i = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(bins);
    while (i < mass.size() && cum + mass[i] < target) cum += mass[i++];
    if (i >= mass.size()) break;
    double f = mass[i] > 0.0 ? (target - cum) / mass[i] : 0.0;
    double x = fine_edges[i] + f * (fine_edges[i + 1] - fine_edges[i]);
    if (x > e.back() && x < hi) e.push_back(x);
  }
  e.push_back(hi);
  return e;
}

void check_edges(std::span<const double> edges, const std::string& field) {
  if (edges.size() < 2) throw ValidationError(field, "need at least two edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw ValidationError(field, "edges must be finite");
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw ValidationError(field, "edges must be strictly increasing");
    }
  }
}

std::vector<double> align_edges(const DimensionSpec& dim,
                                std::span<const double> edges) {
  std::vector<double> out;
  for (double x : edges) {
    double b = dim.boundary(dim.nearest_boundary(x));
    if (out.empty() || b > out.back()) out.push_back(b);
  }
  if (out.size() < 2 && !edges.empty()) {
    auto lo = dim.floor_boundary(edges.front());
    auto hi = dim.ceil_boundary(edges.back());
    if (lo == hi) {
      if (hi < static_cast<std::int64_t>(dim.scale_count)) {
        ++hi;
      } else {
        --lo;
      }
    }
    out = {dim.boundary(lo), dim.boundary(hi)};
  }
  return out;
}

std::vector<double> aligned_uniform_edges(const DimensionSpec& dim, double lo,
                                          double hi, std::size_t bins) {
  if (bins == 0) throw ValidationError("bins", "must be >= 1");
  const auto S = static_cast<std::int64_t>(dim.scale_count);
  auto n = static_cast<std::int64_t>(std::min<std::size_t>(bins, dim.scale_count));
  const double u0 = dim.position(lo), u1 = dim.position(hi);
  const double want = std::max(1.0, std::round((u1 - u0) / static_cast<double>(n)));
  auto q = static_cast<std::int64_t>(nearest_smooth_235(static_cast<std::uint64_t>(want)));
  if (n * q > S) {
    q = S / n;
    while (!is_smooth_235(static_cast<std::uint64_t>(q))) --q;
  }
  const std::int64_t span = n * q;
  const double centre = 0.5 * (u0 + u1);
  auto start = static_cast<std::int64_t>(std::llround((centre - 0.5 * static_cast<double>(span)) /
                                                      static_cast<double>(q))) * q;
  start = std::min(start, (S - span) / q * q);
  start = std::max<std::int64_t>(start, 0);
  std::vector<double> e;
  for (std::int64_t t = 0; t <= n; ++t) e.push_back(dim.boundary(start + t * q));
  return e;
}

}  // namespace ihcube
