#include "ihcube/integral_histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ihcube/error.hpp"
#include "ihcube/kernels.hpp"

namespace ihcube {

namespace {

using Pair = std::pair<std::uint32_t, std::uint32_t>;

// Lattice points used along one axis and, per output cell, the positions of
// its lower and upper prefix within those points.
struct AxisPlan {
  std::vector<std::uint32_t> points;
  std::vector<Pair> pairs;
};

AxisPlan make_plan(const std::vector<Pair>& prefix_pairs) {
  AxisPlan plan;
  plan.points.reserve(prefix_pairs.size() * 2);
  for (const auto& [a, b] : prefix_pairs) {
    plan.points.push_back(a);
    plan.points.push_back(b);
  }
  std::sort(plan.points.begin(), plan.points.end());
  plan.points.erase(std::unique(plan.points.begin(), plan.points.end()),
                    plan.points.end());
  auto pos = [&](std::uint32_t v) {
    return static_cast<std::uint32_t>(
        std::lower_bound(plan.points.begin(), plan.points.end(), v) -
        plan.points.begin());
  };
  plan.pairs.reserve(prefix_pairs.size());
  for (const auto& [a, b] : prefix_pairs) plan.pairs.emplace_back(pos(a), pos(b));
  return plan;
}

// Applies one adjacent difference per axis, in axis order, to a lattice of
// values with `slots` entries per point.
template <class T>
void difference_all_axes(std::vector<T>& values, std::vector<std::size_t> shape,
                         std::span<const AxisPlan> plans, std::size_t slots,
                         bool parallel) {
  std::vector<T> next;
  for (std::size_t axis = 0; axis < plans.size(); ++axis) {
    std::size_t out_size = slots;
    for (std::size_t j = 0; j < shape.size(); ++j) {
      out_size *= (j == axis) ? plans[axis].pairs.size() : shape[j];
    }
    next.assign(out_size, T{});
    std::span<const Pair> pairs(plans[axis].pairs);
    if (parallel) {
      kernels::difference_axis_parallel<T>(values, shape, axis, slots, pairs,
                                           next);
    } else {
      kernels::difference_axis_serial<T>(values, shape, axis, slots, pairs,
                                         next);
    }
    shape[axis] = plans[axis].pairs.size();
    values.swap(next);
  }
}

}  // namespace

ScaleCoord to_scale(const DimensionSpec& dim, double x) {
  return {dim.position(x), dim.floor_boundary(x), dim.ceil_boundary(x)};
}

std::vector<std::vector<std::int64_t>> plan_cell_edges(
    std::span<const DimensionSpec> axes, const Rect& bounds,
    const ResolutionPolicy& policy) {
  const std::size_t k = axes.size();
  std::vector<std::int64_t> lo(k), hi(k), width(k, 1);
  std::vector<bool> locked(k, false);

  auto count_for = [&](std::size_t d, std::int64_t w) {
    std::int64_t first = lo[d] / w;
    std::int64_t last = (hi[d] + w - 1) / w;
    return static_cast<std::uint64_t>(last - first);
  };
  auto coarsen = [](std::int64_t w) {
    return static_cast<std::int64_t>(
        next_smooth_235(static_cast<std::uint64_t>(w) + 1));
  };

  for (std::size_t d = 0; d < k; ++d) {
    lo[d] = axes[d].unit(bounds[d].lo);
    hi[d] = axes[d].unit(bounds[d].hi) + 1;
    std::uint64_t cap = std::max<std::uint32_t>(policy.max_cells_per_dim, 1);
    if (axes[d].kind == DimensionKind::categorical &&
        axes[d].scale_count <= policy.categorical_full_resolution) {
      cap = std::max<std::uint64_t>(cap, axes[d].scale_count);
      locked[d] = true;
    }
    while (count_for(d, width[d]) > cap) width[d] = coarsen(width[d]);
  }

  auto total = [&] {
    long double t = 1.0;
    for (std::size_t d = 0; d < k; ++d) t *= count_for(d, width[d]);
    return t;
  };
  while (total() > static_cast<long double>(policy.max_cells_total)) {
    std::size_t best = k;
    std::uint64_t best_count = 1;
    for (std::size_t d = 0; d < k; ++d) {
      auto c = count_for(d, width[d]);
      if (!locked[d] && c > best_count) {
        best = d;
        best_count = c;
      }
    }
    if (best == k) break;
    width[best] = coarsen(width[best]);
  }

  std::vector<std::vector<std::int64_t>> edges(k);
  for (std::size_t d = 0; d < k; ++d) {
    const auto scales = static_cast<std::int64_t>(axes[d].scale_count);
    const std::int64_t w = width[d];
    for (std::int64_t e = (lo[d] / w) * w; e < hi[d]; e += w) {
      edges[d].push_back(e);
    }
    edges[d].push_back(std::min(edges[d].back() + w, scales));
  }
  return edges;
}

std::size_t DescriptorGrid::cells() const {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

FeatureDescriptor DescriptorGrid::at(std::size_t flat) const {
  const std::size_t c = layout.count_slots();
  const std::size_t s = layout.sum_slots;
  return FeatureDescriptor(
      layout,
      std::vector<std::int64_t>(counts.begin() + flat * c,
                                counts.begin() + (flat + 1) * c),
      std::vector<double>(sums.begin() + flat * s, sums.begin() + (flat + 1) * s));
}

IntegralHistogram::IntegralHistogram(
    std::vector<std::vector<std::int64_t>> edges, DescriptorLayout layout,
    LocalBinning hist_binning)
    : edges_(std::move(edges)), layout_(layout), hist_binning_(hist_binning) {
  if (layout_.kind == DescriptorKind::histogram) {
    hist_binning_.bins = layout_.histogram_bins;
  }
  strides_.assign(edges_.size(), 1);
  cells_ = 1;
  for (std::size_t d = edges_.size(); d-- > 0;) {
    const auto& e = edges_[d];
    if (e.size() < 2) throw ConstructionError("axis needs at least one cell");
    for (std::size_t i = 1; i < e.size(); ++i) {
      if (e[i] <= e[i - 1]) {
        throw ConstructionError("cell edges must be strictly increasing");
      }
    }
    strides_[d] = cells_;
    cells_ *= e.size() - 1;
  }
  counts_.assign(cells_ * layout_.count_slots(), 0);
  sums_.assign(cells_ * layout_.sum_slots, 0.0);
}

IntegralHistogram IntegralHistogram::from_raw(
    std::vector<std::vector<std::int64_t>> edges, DescriptorLayout layout,
    LocalBinning hist_binning, std::vector<std::int64_t> counts,
    std::vector<double> sums) {
  IntegralHistogram ih(std::move(edges), layout, hist_binning);
  if (counts.size() != ih.counts_.size() || sums.size() != ih.sums_.size()) {
    throw FormatError("integral histogram table size mismatch");
  }
  ih.counts_ = std::move(counts);
  ih.sums_ = std::move(sums);
  ih.finalized_ = true;
  return ih;
}

IntegralHistogram IntegralHistogram::build(std::span<const DimensionSpec> axes,
                                           std::span<const DataPoint> points,
                                           const Rect& bounds,
                                           const ResolutionPolicy& policy,
                                           const DescriptorLayout& layout,
                                           bool parallel) {
  for (const auto& p : points) {
    if (!bounds.contains(p.coordinates)) {
      throw ConstructionError("point outside subspace bounds");
    }
  }
  LocalBinning binning;
  if (layout.kind == DescriptorKind::histogram && !points.empty()) {
    binning.lo = std::numeric_limits<double>::infinity();
    binning.hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      binning.lo = std::min(binning.lo, p.measures[layout.histogram_measure]);
      binning.hi = std::max(binning.hi, p.measures[layout.histogram_measure]);
    }
  }
  IntegralHistogram ih(plan_cell_edges(axes, bounds, policy), layout, binning);
  for (const auto& p : points) ih.accumulate(axes, p.coordinates, p.measures);
  ih.finalize(parallel);
  return ih;
}

std::vector<std::size_t> IntegralHistogram::cell_counts() const {
  std::vector<std::size_t> n;
  n.reserve(edges_.size());
  for (const auto& e : edges_) n.push_back(e.size() - 1);
  return n;
}

Rect IntegralHistogram::bounds(std::span<const DimensionSpec> axes) const {
  Rect r(edges_.size());
  for (std::size_t d = 0; d < edges_.size(); ++d) {
    r[d] = {axes[d].boundary(edges_[d].front()),
            axes[d].boundary(edges_[d].back())};
  }
  return r;
}

std::size_t IntegralHistogram::cell_of(std::size_t axis,
                                       std::int64_t unit) const {
  const auto& e = edges_[axis];
  if (unit < e.front() || unit >= e.back()) {
    throw ConstructionError("point outside integral histogram cells");
  }
  return static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), unit) -
                                  e.begin()) -
         1;
}

void IntegralHistogram::accumulate(std::span<const DimensionSpec> axes,
                                   std::span<const double> coordinates,
                                   std::span<const double> measures) {
  if (finalized_) throw ConstructionError("accumulate after finalize");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < edges_.size(); ++d) {
    flat += cell_of(d, axes[d].unit(coordinates[d])) * strides_[d];
  }
  const std::size_t c = layout_.count_slots();
  counts_[flat * c] += 1;
  if (layout_.kind == DescriptorKind::histogram) {
    counts_[flat * c + 1 +
            hist_binning_.bin_of(measures[layout_.histogram_measure])] += 1;
  }
  const std::size_t s = layout_.sum_slots;
  for (std::size_t i = 0; i < s; ++i) sums_[flat * s + i] += measures[i];
}

void IntegralHistogram::finalize(bool parallel) {
  if (finalized_) return;
  const auto shape = cell_counts();
  if (parallel) {
    kernels::prefix_sum_parallel<std::int64_t>(counts_, shape,
                                               layout_.count_slots());
    kernels::prefix_sum_parallel<double>(sums_, shape, layout_.sum_slots);
  } else {
    kernels::prefix_sum_serial<std::int64_t>(counts_, shape,
                                             layout_.count_slots());
    kernels::prefix_sum_serial<double>(sums_, shape, layout_.sum_slots);
  }
  finalized_ = true;
}

FeatureDescriptor IntegralHistogram::prefix(
    std::span<const std::size_t> index) const {
  FeatureDescriptor out(layout_);
  std::size_t flat = 0;
  for (std::size_t d = 0; d < edges_.size(); ++d) {
    if (index[d] == 0) return out;
    flat += (std::min(index[d], edges_[d].size() - 1) - 1) * strides_[d];
  }
  const std::size_t c = layout_.count_slots();
  const std::size_t s = layout_.sum_slots;
  std::copy_n(counts_.begin() + flat * c, c, out.counts().begin());
  std::copy_n(sums_.begin() + flat * s, s, out.sums().begin());
  return out;
}

FeatureDescriptor IntegralHistogram::total() const {
  std::vector<std::size_t> corner;
  for (const auto& e : edges_) corner.push_back(e.size() - 1);
  return prefix(corner);
}

std::size_t IntegralHistogram::snap(std::size_t axis, const ScaleCoord& c,
                                    Rounding rounding, bool lower_side) const {
  const auto& e = edges_[axis];
  const std::size_t n = e.size() - 1;
  bool round_up;  // smallest edge >= ceil, else largest edge <= floor
  switch (rounding) {
    case Rounding::inner: round_up = lower_side; break;
    case Rounding::outer: round_up = !lower_side; break;
    case Rounding::nearest:
    default: {
      const double x = c.on_boundary() ? static_cast<double>(c.floor) : c.pos;
      if (x <= static_cast<double>(e.front())) return 0;
      if (x >= static_cast<double>(e.back())) return n;
      auto it = std::upper_bound(e.begin(), e.end(), x,
                                 [](double v, std::int64_t edge) {
                                   return v < static_cast<double>(edge);
                                 });
      std::size_t i = static_cast<std::size_t>(it - e.begin()) - 1;
      double below = x - static_cast<double>(e[i]);
      double above = static_cast<double>(e[i + 1]) - x;
      return below <= above ? i : i + 1;
    }
  }
  if (round_up) {
    auto it = std::lower_bound(e.begin(), e.end(), c.ceil);
    return std::min(static_cast<std::size_t>(it - e.begin()), n);
  }
  auto it = std::upper_bound(e.begin(), e.end(), c.floor);
  auto i = static_cast<std::ptrdiff_t>(it - e.begin()) - 1;
  return static_cast<std::size_t>(std::max<std::ptrdiff_t>(i, 0));
}

bool IntegralHistogram::on_cell_edge(std::size_t axis,
                                     const ScaleCoord& c) const {
  const auto& e = edges_[axis];
  if (!c.on_boundary()) {
    return c.pos < static_cast<double>(e.front()) ||
           c.pos > static_cast<double>(e.back());
  }
  return c.floor <= e.front() || c.floor >= e.back() ||
         std::binary_search(e.begin(), e.end(), c.floor);
}

void IntegralHistogram::gather(std::span<const std::vector<std::uint32_t>> points,
                               std::span<std::int64_t> counts,
                               std::span<double> sums, bool parallel) const {
  const std::size_t k = edges_.size();
  const std::size_t c = layout_.count_slots();
  const std::size_t s = layout_.sum_slots;
  // Per axis, the table offset of each lattice point; npos for prefix 0.
  constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> offsets(k);
  for (std::size_t d = 0; d < k; ++d) {
    for (auto p : points[d]) {
      offsets[d].push_back(p == 0 ? npos : (p - 1) * strides_[d]);
    }
  }
  const std::size_t inner_points = [&] {
    std::size_t n = 1;
    for (std::size_t d = 1; d < k; ++d) n *= points[d].size();
    return n;
  }();
  const std::size_t first = points[0].size();

  auto fill_block = [&](std::size_t i0) {
    std::vector<std::size_t> idx(k, 0);
    idx[0] = i0;
    for (std::size_t r = 0; r < inner_points; ++r) {
      const std::size_t out = i0 * inner_points + r;
      std::size_t flat = 0;
      bool zero = false;
      for (std::size_t d = 0; d < k; ++d) {
        std::size_t off = offsets[d][idx[d]];
        if (off == npos) {
          zero = true;
          break;
        }
        flat += off;
      }
      if (zero) {
        std::fill_n(counts.begin() + out * c, c, 0);
        std::fill_n(sums.begin() + out * s, s, 0.0);
      } else {
        std::copy_n(counts_.begin() + flat * c, c, counts.begin() + out * c);
        std::copy_n(sums_.begin() + flat * s, s, sums.begin() + out * s);
      }
      for (std::size_t d = k; d-- > 1;) {
        if (++idx[d] < points[d].size()) break;
        idx[d] = 0;
      }
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t i0 = 0; i0 < first; ++i0) fill_block(i0);
  } else {
    for (std::size_t i0 = 0; i0 < first; ++i0) fill_block(i0);
  }
}

void IntegralHistogram::query_grid(
    std::span<const std::vector<ScaleCoord>> axis_edges, Rounding rounding,
    DescriptorGrid& out, CoincidenceFlags* coincidence, bool parallel) const {
  const std::size_t k = edges_.size();
  if (axis_edges.size() != k) {
    throw SchemaError("grid dimensionality does not match histogram");
  }
  std::vector<AxisPlan> plans(k);
  std::vector<std::vector<std::uint32_t>> points(k);
  std::vector<std::size_t> lattice_shape(k);
  if (coincidence) coincidence->assign(k, {});
  std::size_t lattice = 1;
  for (std::size_t d = 0; d < k; ++d) {
    const auto& ed = axis_edges[d];
    if (ed.size() < 2) throw ValidationError("", "grid axis needs two edges");
    std::vector<Pair> prefix_pairs;
    prefix_pairs.reserve(ed.size() - 1);
    for (std::size_t t = 0; t + 1 < ed.size(); ++t) {
      auto a = snap(d, ed[t], rounding, true);
      auto b = std::max(a, snap(d, ed[t + 1], rounding, false));
      prefix_pairs.emplace_back(static_cast<std::uint32_t>(a),
                                static_cast<std::uint32_t>(b));
    }
    plans[d] = make_plan(prefix_pairs);
    points[d] = plans[d].points;
    lattice_shape[d] = points[d].size();
    lattice *= lattice_shape[d];
    if (coincidence) {
      auto& flags = (*coincidence)[d];
      flags.resize(ed.size() - 1);
      bool prev = on_cell_edge(d, ed[0]);
      for (std::size_t t = 0; t + 1 < ed.size(); ++t) {
        bool next = on_cell_edge(d, ed[t + 1]);
        flags[t] = prev && next;
        prev = next;
      }
    }
  }

  const std::size_t c = layout_.count_slots();
  const std::size_t s = layout_.sum_slots;
  out.layout = layout_;
  out.counts.resize(lattice * c);
  out.sums.resize(lattice * s);
  gather(points, out.counts, out.sums, parallel);
  difference_all_axes(out.counts, lattice_shape, plans, c, parallel);
  difference_all_axes(out.sums, lattice_shape, plans, s, parallel);
  out.shape.resize(k);
  for (std::size_t d = 0; d < k; ++d) out.shape[d] = plans[d].pairs.size();
}

FeatureDescriptor IntegralHistogram::query_rect(
    std::span<const ScaleCoord> lo, std::span<const ScaleCoord> hi,
    Rounding rounding) const {
  const std::size_t k = edges_.size();
  const std::size_t c = layout_.count_slots();
  const std::size_t s = layout_.sum_slots;
  std::vector<std::size_t> a(k), b(k);
  for (std::size_t d = 0; d < k; ++d) {
    a[d] = snap(d, lo[d], rounding, true);
    b[d] = std::max(a[d], snap(d, hi[d], rounding, false));
  }
  // H at the 2^k corners, laid out as a 2 x ... x 2 array (bit d of the
  // corner number selects the upper corner on axis k - 1 - d).
  const std::size_t corners = std::size_t{1} << k;
  std::vector<std::int64_t> cc(corners * c);
  std::vector<double> cs(corners * s);
  std::vector<std::size_t> index(k);
  for (std::size_t m = 0; m < corners; ++m) {
    for (std::size_t d = 0; d < k; ++d) {
      bool upper = (m >> (k - 1 - d)) & 1u;
      index[d] = upper ? b[d] : a[d];
    }
    auto h = prefix(index);
    std::copy(h.counts().begin(), h.counts().end(), cc.begin() + m * c);
    std::copy(h.sums().begin(), h.sums().end(), cs.begin() + m * s);
  }
  const Pair unit_pair{0, 1};
  std::vector<std::size_t> shape(k, 2);
  std::vector<std::int64_t> nc;
  std::vector<double> ns;
  for (std::size_t d = 0; d < k; ++d) {
    std::size_t out_cells = 1;
    for (std::size_t j = 0; j < k; ++j) out_cells *= (j == d) ? 1 : shape[j];
    nc.assign(out_cells * c, 0);
    ns.assign(out_cells * s, 0.0);
    kernels::difference_axis_serial<std::int64_t>(
        cc, shape, d, c, std::span<const Pair>(&unit_pair, 1), nc);
    kernels::difference_axis_serial<double>(
        cs, shape, d, s, std::span<const Pair>(&unit_pair, 1), ns);
    shape[d] = 1;
    cc.swap(nc);
    cs.swap(ns);
  }
  return FeatureDescriptor(layout_, std::move(cc), std::move(cs));
}

FeatureDescriptor IntegralHistogram::query_rect(
    std::span<const DimensionSpec> axes, const Rect& rect,
    Rounding rounding) const {
  std::vector<ScaleCoord> lo, hi;
  for (std::size_t d = 0; d < edges_.size(); ++d) {
    lo.push_back(to_scale(axes[d], rect[d].lo));
    hi.push_back(to_scale(axes[d], rect[d].hi));
  }
  return query_rect(lo, hi, rounding);
}

std::size_t IntegralHistogram::storage_bytes() const {
  std::size_t bytes = counts_.size() * sizeof(std::int64_t) +
                      sums_.size() * sizeof(double);
  for (const auto& e : edges_) bytes += e.size() * sizeof(std::int64_t);
  return bytes;
}

}  // namespace ihcube
