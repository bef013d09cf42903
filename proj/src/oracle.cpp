#include "ihcube/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "ihcube/binning.hpp"
#include "ihcube/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ihcube {

namespace {

struct Tally {
  std::vector<std::int64_t> count;
  std::vector<double> sum;
  std::vector<std::vector<double>> values;  // median only
};

class CellLocator {
 public:
  CellLocator(const Schema& schema, const QuerySpec& spec)
      : axes_(schema.index_axes()), spec_(spec), stride_(spec.group_axes.size()) {
    if (spec.filter.size() != axes_.size()) {
      throw ValidationError("filter", "one entry per index axis");
    }
    for (std::size_t i = spec.group_axes.size(); i-- > 0;) {
      stride_[i] = cells_;
      cells_ *= spec.edges[i].size() - 1;
    }
  }

  std::size_t cells() const { return cells_; }

  std::optional<std::size_t> locate(const DataPoint& p) const {
    for (std::size_t d = 0; d < axes_.size(); ++d) {
      const double x = p.coordinates[d];
      const auto& runs = spec_.filter[d];
      bool in = std::any_of(runs.begin(), runs.end(), [&](const Interval& r) {
        return in_interval(x, r.lo, r.hi, axes_[d].domain_max);
      });
      if (!in) return std::nullopt;
    }
    std::size_t cell = 0;
    for (std::size_t i = 0; i < spec_.group_axes.size(); ++i) {
      const auto d = spec_.group_axes[i];
      const auto& e = spec_.edges[i];
      auto b = locate_bin(e, p.coordinates[d], e.back() == axes_[d].domain_max);
      if (!b) return std::nullopt;
      cell += *b * stride_[i];
    }
    return cell;
  }

 private:
  std::vector<DimensionSpec> axes_;
  const QuerySpec& spec_;
  std::vector<std::size_t> stride_;
  std::size_t cells_ = 1;
};

void init(Tally& t, std::size_t cells, const Measure& m) {
  t.count.assign(cells, 0);
  t.sum.assign(cells, 0.0);
  if (m.kind == MeasureKind::median) t.values.assign(cells, {});
}

void add(Tally& t, std::size_t cell, const DataPoint& p, const Measure& m) {
  ++t.count[cell];
  if (m.kind == MeasureKind::count) return;
  const double v = p.measures[m.target];
  t.sum[cell] += v;
  if (m.kind == MeasureKind::median) t.values[cell].push_back(v);
}

QueryResult finish(const QuerySpec& spec, Tally& t) {
  QueryResult r;
  r.edges = spec.edges;
  for (const auto& e : spec.edges) r.shape.push_back(e.size() - 1);
  r.values.resize(t.count.size());
  for (std::size_t c = 0; c < t.count.size(); ++c) {
    const double n = static_cast<double>(t.count[c]);
    switch (spec.measure.kind) {
      case MeasureKind::count: r.values[c] = n; break;
      case MeasureKind::sum: r.values[c] = t.sum[c]; break;
      case MeasureKind::mean:
        if (n > 0) r.values[c] = t.sum[c] / n;
        break;
      case MeasureKind::median: {
        auto& v = t.values[c];
        if (v.empty()) break;
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        r.values[c] = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        break;
      }
    }
  }
  return r;
}

}  // namespace

QueryResult scan_oracle(const Schema& schema, const PointSource& source,
                        const QuerySpec& spec) {
  CellLocator loc(schema, spec);
  Tally t;
  init(t, loc.cells(), spec.measure);
  source.scan([&](const DataPoint& p) {
    if (auto c = loc.locate(p)) add(t, *c, p, spec.measure);
  });
  return finish(spec, t);
}

QueryResult scan_oracle(const Schema& schema, std::span<const DataPoint> points,
                        const QuerySpec& spec, bool parallel) {
  if (!parallel || spec.measure.kind == MeasureKind::median) {
    return scan_oracle(schema, VectorSource(points), spec);
  }
  CellLocator loc(schema, spec);
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::vector<Tally> part(static_cast<std::size_t>(threads));
  // Static contiguous chunks, merged in thread order.
#pragma omp parallel num_threads(threads)
  {
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    auto& t = part[static_cast<std::size_t>(tid)];
    init(t, loc.cells(), spec.measure);
    const std::size_t n = points.size();
    const std::size_t lo = n * static_cast<std::size_t>(tid) / static_cast<std::size_t>(threads);
    const std::size_t hi = n * static_cast<std::size_t>(tid + 1) / static_cast<std::size_t>(threads);
    for (std::size_t i = lo; i < hi; ++i) {
      if (auto c = loc.locate(points[i])) add(t, *c, points[i], spec.measure);
    }
  }
  Tally all;
  init(all, loc.cells(), spec.measure);
  for (const auto& t : part) {
    for (std::size_t c = 0; c < loc.cells(); ++c) {
      all.count[c] += t.count[c];
      all.sum[c] += t.sum[c];
    }
  }
  return finish(spec, all);
}

double average_relative_error(std::span<const std::optional<double>> values,
                              std::span<const std::optional<double>> exact) {
  if (values.size() != exact.size()) {
    throw ValidationError("values", "shape mismatch against the exact grid");
  }
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i] && !exact[i]) continue;
    if (!values[i] || !exact[i]) {
      double v = values[i].value_or(exact[i].value_or(0.0));
      total += v == 0.0 ? 0.0 : 1.0;
      continue;
    }
    const double v = *values[i], x = *exact[i];
    const double den = std::max(std::abs(v), std::abs(x));
    if (den > 0.0) total += std::abs(v - x) / den;
  }
  return total / static_cast<double>(values.size());
}

}  // namespace ihcube
