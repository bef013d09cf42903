#include "ihcube/query.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ihcube/error.hpp"

namespace ihcube {

namespace {

constexpr std::size_t kEquiDataFineBins = 512;
constexpr std::size_t kMaxCells = std::size_t{1} << 22;

// Output cells laid out over the group axes in index order.
struct CellLayout {
  std::vector<std::size_t> stride;  // per index axis; 0 for non-group axes
  std::size_t cells = 1;
};

// One combination of filter runs, with cell edges clipped to it.
struct Combo {
  std::vector<std::vector<double>> edges;  // per index axis
  std::vector<std::vector<char>> active;   // per index axis, per cell
  std::vector<std::vector<ScaleCoord>> coords;
  Rect hull;
};

struct Accum {
  std::vector<double> count, sum;
  std::vector<std::vector<HistogramComponent>> parts;
  std::vector<char> coincident;

  void init(std::size_t cells, const Measure& m, bool flags) {
    count.assign(cells, 0.0);
    if (m.kind == MeasureKind::sum || m.kind == MeasureKind::mean) sum.assign(cells, 0.0);
    if (m.kind == MeasureKind::median) parts.assign(cells, {});
    if (flags) coincident.assign(cells, 1);
  }

  void add(Accum&& o) {
    for (std::size_t i = 0; i < count.size(); ++i) count[i] += o.count[i];
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.sum[i];
    for (std::size_t i = 0; i < parts.size(); ++i) {
      for (auto& p : o.parts[i]) parts[i].push_back(std::move(p));
    }
    for (std::size_t i = 0; i < coincident.size(); ++i) coincident[i] &= o.coincident[i];
  }
};

// Odometer over a box of cells; calls fn(global_flat, local_flat, index).
template <class Fn>
void for_each_cell(const std::vector<std::size_t>& lo,
                   const std::vector<std::size_t>& extent,
                   const CellLayout& layout, Fn&& fn) {
  const std::size_t k = extent.size();
  std::size_t total = 1;
  for (auto e : extent) total *= e;
  if (total == 0) return;
  std::vector<std::size_t> idx(k, 0);
  std::size_t base = 0;
  for (std::size_t d = 0; d < k; ++d) base += lo[d] * layout.stride[d];
  std::size_t global = base;
  for (std::size_t local = 0; local < total; ++local) {
    fn(global, local, idx);
    for (std::size_t d = k; d-- > 0;) {
      if (++idx[d] < extent[d]) {
        global += layout.stride[d];
        break;
      }
      global -= (extent[d] - 1) * layout.stride[d];
      idx[d] = 0;
    }
  }
}

std::vector<std::uint32_t> leaf_indices(const Tree& tree,
                                        const std::vector<std::uint32_t>& ids) {
  std::vector<std::uint32_t> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(tree.node(id).leaf_index);
  std::sort(out.begin(), out.end());
  return out;
}

bool needs_sum(const Measure& m) {
  return m.kind == MeasureKind::sum || m.kind == MeasureKind::mean;
}

// Cell range [t0, t1) of one axis that meets [lo, hi] (closed).
std::pair<std::size_t, std::size_t> cell_range(const std::vector<double>& e,
                                               double lo, double hi) {
  std::size_t n = e.size() - 1;
  std::size_t t0 = 0;
  while (t0 < n && e[t0 + 1] < lo) ++t0;
  std::size_t t1 = n;
  while (t1 > t0 && e[t1 - 1] > hi) --t1;
  return {t0, t1};
}

void add_leaf(const Index& index, const QuerySpec& spec, const CellLayout& layout,
              const Combo& combo, std::uint32_t leaf, Rounding rounding,
              Accum& acc, DescriptorGrid& grid, bool flags) {
  const auto& ih = index.ihs[leaf];
  // Cells beyond the table's own extent snap to empty under every rounding,
  // so they can be skipped without changing the sum.
  const Rect extent_box = ih.bounds(index.axes);
  const std::size_t dims = index.axes.size();
  std::vector<std::size_t> lo(dims), extent(dims);
  std::vector<std::vector<ScaleCoord>> sub(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    auto [t0, t1] = cell_range(combo.edges[d], extent_box[d].lo, extent_box[d].hi);
    if (t0 >= t1) return;
    lo[d] = t0;
    extent[d] = t1 - t0;
    sub[d].assign(combo.coords[d].begin() + static_cast<std::ptrdiff_t>(t0),
                  combo.coords[d].begin() + static_cast<std::ptrdiff_t>(t1 + 1));
  }
  CoincidenceFlags cf;
  ih.query_grid(sub, rounding, grid, flags ? &cf : nullptr);
  const std::size_t c = grid.layout.count_slots();
  const std::size_t s = grid.layout.sum_slots;
  const auto& m = spec.measure;
  for_each_cell(lo, extent, layout, [&](std::size_t g, std::size_t j,
                                        const std::vector<std::size_t>& idx) {
    bool on = true, coincide = true;
    for (std::size_t d = 0; d < dims; ++d) {
      on = on && combo.active[d][lo[d] + idx[d]];
      if (flags) coincide = coincide && cf[d][idx[d]];
    }
    if (!on) return;
    if (flags && !coincide) acc.coincident[g] = 0;
    acc.count[g] += static_cast<double>(grid.counts[j * c]);
    if (needs_sum(m)) acc.sum[g] += grid.sums[j * s + m.target];
    if (m.kind == MeasureKind::median) {
      HistogramComponent part{ih.hist_binning(), {}};
      bool any = false;
      for (std::size_t b = 1; b < c; ++b) {
        auto v = grid.counts[j * c + b];
        any = any || v != 0;
        part.mass.push_back(static_cast<double>(v));
      }
      if (any) acc.parts[g].push_back(std::move(part));
    }
  });
}

// Share of a node's points credited to each cell when the node stands in
// for the leaves below it: points are taken as spread uniformly over its MBR.
void add_node(const Index& index, const QuerySpec& spec, const CellLayout& layout,
              const Combo& combo, std::uint32_t node,
              const std::vector<HistogramComponent>& node_parts, Accum& nearest,
              Accum* inner, Accum* outer) {
  const auto& mbr = index.tree.node(node).mbr;
  const auto& total = index.node_totals[node];
  const std::size_t dims = index.axes.size();
  std::vector<std::vector<double>> frac(dims);
  std::vector<std::vector<char>> inside(dims), touches(dims);
  std::vector<std::size_t> lo(dims, 0), extent(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const auto& e = combo.edges[d];
    const double m0 = mbr[d].lo, m1 = mbr[d].hi, top = index.axes[d].domain_max;
    const std::size_t n = e.size() - 1;
    extent[d] = n;
    frac[d].resize(n);
    inside[d].resize(n);
    touches[d].resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double a = e[t], b = e[t + 1];
      if (!combo.active[d][t]) continue;
      frac[d][t] = m1 > m0 ? std::max(0.0, std::min(b, m1) - std::max(a, m0)) / (m1 - m0)
                           : (in_interval(m0, a, b, top) ? 1.0 : 0.0);
      inside[d][t] = a <= m0 && (m1 < b || (b == top && m1 <= b));
      touches[d][t] = m1 >= a && (m0 < b || (b == top && m0 <= b));
    }
  }
  const auto& m = spec.measure;
  const double count = static_cast<double>(total.count());
  const double sum = needs_sum(m) ? total.sums()[m.target] : 0.0;
  for_each_cell(lo, extent, layout, [&](std::size_t g, std::size_t,
                                        const std::vector<std::size_t>& idx) {
    double f = 1.0;
    bool in = true, out = true;
    for (std::size_t d = 0; d < dims; ++d) {
      f *= frac[d][idx[d]];
      in = in && inside[d][idx[d]];
      out = out && touches[d][idx[d]];
    }
    if (f > 0.0) {
      nearest.count[g] += count * f;
      if (needs_sum(m)) nearest.sum[g] += sum * f;
      if (m.kind == MeasureKind::median) {
        for (const auto& p : node_parts) {
          HistogramComponent scaled{p.binning, p.mass};
          for (auto& v : scaled.mass) v *= f;
          nearest.parts[g].push_back(std::move(scaled));
        }
      }
    }
    if (inner && in) {
      inner->count[g] += count;
      if (needs_sum(m)) inner->sum[g] += sum;
    }
    if (outer && out) {
      outer->count[g] += count;
      if (needs_sum(m)) outer->sum[g] += sum;
    }
  });
}

std::optional<double> estimate(const Accum& a, std::size_t g, const Measure& m) {
  switch (m.kind) {
    case MeasureKind::count: return a.count[g];
    case MeasureKind::sum: return a.sum[g];
    case MeasureKind::mean:
      if (!(a.count[g] > 0.0)) return std::nullopt;
      return a.sum[g] / a.count[g];
    case MeasureKind::median: return estimate_median(a.parts[g]);
  }
  return std::nullopt;
}

void check_bounds_supported(const Index& index, const QuerySpec& spec) {
  if (!spec.want_error_bounds) return;
  const auto& m = spec.measure;
  if (m.kind == MeasureKind::median) {
    throw UnsupportedError("error bounds are not available for median");
  }
  if (needs_sum(m) && index.schema.measure_dim(m.target).domain_min < 0.0) {
    throw UnsupportedError("error bounds for sum and mean need a nonnegative measure");
  }
}

std::uint32_t answer_level(const Index& index, const AccuracyMode& acc) {
  if (acc.mode != CandidateMode::tree_at_height || index.tree.empty()) return 0;
  const auto h = index.tree.height();
  if (acc.height < 1 || acc.height > h) {
    throw ValidationError("accuracy_mode", "height must lie in [1, " +
                                               std::to_string(h) + "]");
  }
  return h - acc.height;
}

}  // namespace

AccuracyMode AccuracyMode::parse(const std::string& s) {
  if (s == "tree") return {CandidateMode::tree, 0};
  if (s == "lsh") return {CandidateMode::lsh, 0};
  const std::string prefix = "tree@";
  if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size()) {
    std::uint32_t h = 0;
    for (std::size_t i = prefix.size(); i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9' || h > 1000000) {
        throw ValidationError("accuracy_mode", "expected tree@<height>");
      }
      h = h * 10 + static_cast<std::uint32_t>(s[i] - '0');
    }
    return {CandidateMode::tree_at_height, h};
  }
  throw ValidationError("accuracy_mode", "expected \"lsh\", \"tree\" or \"tree@<h>\"");
}

std::string AccuracyMode::to_string() const {
  switch (mode) {
    case CandidateMode::lsh: return "lsh";
    case CandidateMode::tree: return "tree";
    case CandidateMode::tree_at_height: return "tree@" + std::to_string(height);
  }
  return "tree";
}

QuerySpec QuerySpec::full(const Index& index) {
  QuerySpec s;
  for (const auto& a : index.axes) s.filter.push_back({{a.domain_min, a.domain_max}});
  return s;
}

std::vector<std::uint32_t> tree_candidates(const Index& index, const Rect& r) {
  if (index.tree.empty() || r.is_empty()) return {};
  return leaf_indices(index.tree, index.tree.intersecting(r));
}

std::vector<std::uint32_t> lsh_candidates(const Index& index, const Rect& r) {
  if (index.tree.empty() || r.is_empty()) return {};
  std::vector<std::uint32_t> out;
  for (auto leaf : index.lsh.candidates(index.axes, r)) {
    if (index.tree.node(index.tree.leaves()[leaf]).mbr.intersects(r)) out.push_back(leaf);
  }
  std::sort(out.begin(), out.end());
  return out;
}

QuerySpec plan_query(const Index& index, const QueryRequest& req,
                     const ExecOptions& options) {
  const auto& schema = index.schema;
  const auto& axes = index.axes;
  QuerySpec s = QuerySpec::full(index);

  for (const auto& [name, iv] : req.ranges) {
    const std::string field = "filter." + name;
    auto pos = schema.find_index_position(name);
    if (!pos) throw ValidationError(field, "unknown index dimension");
    const auto& dim = axes[*pos];
    if (dim.kind == DimensionKind::categorical) {
      throw ValidationError(field, "categorical dimensions filter by category");
    }
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw ValidationError(field, "expected finite [lo, hi] with lo <= hi");
    }
    double lo = std::max(iv.lo, dim.domain_min), hi = std::min(iv.hi, dim.domain_max);
    if (!(lo < hi)) {
      s.filter[*pos].clear();
      continue;
    }
    if (req.align_scales) {
      std::vector<double> e{lo, hi};
      auto a = align_edges(dim, e);
      lo = a.front();
      hi = a.back();
    }
    s.filter[*pos] = {{lo, hi}};
  }

  for (const auto& [name, labels] : req.categories) {
    const std::string field = "categories." + name;
    auto pos = schema.find_index_position(name);
    if (!pos) throw ValidationError(field, "unknown index dimension");
    const auto& dim = axes[*pos];
    if (dim.kind != DimensionKind::categorical) {
      throw ValidationError(field, "not a categorical dimension");
    }
    std::vector<std::int64_t> codes;
    for (const auto& l : labels) {
      auto c = dim.category_code(l);
      if (!c) throw ValidationError(field, "unknown category '" + l + "'");
      codes.push_back(*c);
    }
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    auto& runs = s.filter[*pos];
    runs.clear();
    for (std::size_t i = 0; i < codes.size();) {
      std::size_t j = i;
      while (j + 1 < codes.size() && codes[j + 1] == codes[j] + 1) ++j;
      runs.push_back({static_cast<double>(codes[i]), static_cast<double>(codes[j] + 1)});
      i = j + 1;
    }
  }

  if (req.measure == MeasureKind::count) {
    s.measure = Measure::count();
  } else {
    auto m = schema.find_measure_position(req.measure_dim);
    if (!m) throw ValidationError("measure.dim", "unknown measure dimension '" + req.measure_dim + "'");
    s.measure = {req.measure, static_cast<std::uint32_t>(*m)};
  }
  check_measure_supported(index.layout, s.measure);
  s.want_error_bounds = req.want_error_bounds;
  check_bounds_supported(index, s);
  s.accuracy = req.accuracy;
  answer_level(index, s.accuracy);

  std::size_t cells = 1;
  for (std::size_t i = 0; i < req.group_by.size(); ++i) {
    const auto& g = req.group_by[i];
    const std::string field = "group_by[" + std::to_string(i) + "]";
    auto pos = schema.find_index_position(g.dim);
    if (!pos) throw ValidationError(field + ".dim", "unknown index dimension '" + g.dim + "'");
    if (std::find(s.group_axes.begin(), s.group_axes.end(), *pos) != s.group_axes.end()) {
      throw ValidationError(field + ".dim", "dimension grouped twice");
    }
    const auto& dim = axes[*pos];
    std::vector<double> edges;
    if (dim.kind == DimensionKind::categorical) {
      edges = equi_width_edges(0.0, dim.domain_max, dim.scale_count);
    } else {
      const auto& runs = s.filter[*pos];
      double lo = dim.domain_min, hi = dim.domain_max;
      if (!runs.empty()) {
        lo = runs.front().lo;
        hi = runs.back().hi;
      }
      if (g.strategy != BinStrategy::explicit_edges && g.bins == 0) {
        throw ValidationError(field + ".bins", "must be >= 1");
      }
      switch (g.strategy) {
        case BinStrategy::equi_width:
          edges = req.align_scales ? aligned_uniform_edges(dim, lo, hi, g.bins)
                                   : equi_width_edges(lo, hi, g.bins);
          break;
        case BinStrategy::log:
          if (!(lo > 0.0)) throw ValidationError(field + ".strategy", "log binning needs a positive range");
          edges = log_edges(lo, hi, g.bins);
          break;
        case BinStrategy::explicit_edges:
          check_edges(g.edges, field + ".edges");
          edges = g.edges;
          break;
        case BinStrategy::equi_data: {
          QuerySpec coarse = s;
          coarse.group_axes = {*pos};
          coarse.edges = {equi_width_edges(lo, hi, kEquiDataFineBins)};
          coarse.measure = Measure::count();
          coarse.accuracy = {};
          coarse.want_error_bounds = false;
          auto r = execute(index, coarse, options);
          std::vector<double> mass;
          for (const auto& v : r.values) mass.push_back(v.value_or(0.0));
          edges = quantile_edges(coarse.edges[0], mass, g.bins);
          break;
        }
      }
      if (req.align_scales) {
        if (g.strategy != BinStrategy::equi_width) edges = align_edges(dim, edges);
        // The filter follows the snapped grid so that edge cells stay whole.
        if (!runs.empty()) s.filter[*pos] = {{edges.front(), edges.back()}};
      }
    }
    cells *= edges.size() - 1;
    if (cells > kMaxCells) throw ValidationError("group_by", "grid has too many cells");
    s.group_axes.push_back(*pos);
    s.edges.push_back(std::move(edges));
  }
  return s;
}

QueryResult execute(const Index& index, const QuerySpec& spec,
                    const ExecOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t dims = index.axes.size();
  if (spec.filter.size() != dims) throw ValidationError("filter", "one entry per index axis");
  if (spec.group_axes.size() != spec.edges.size()) {
    throw ValidationError("group_by", "edges missing for a group axis");
  }
  check_measure_supported(index.layout, spec.measure);
  check_bounds_supported(index, spec);
  const std::uint32_t level = answer_level(index, spec.accuracy);
  const bool bounds = spec.want_error_bounds;
  const auto& m = spec.measure;

  // Per index axis: cell edges (group axes) or a single cell.
  std::vector<const std::vector<double>*> group_edges(dims, nullptr);
  for (std::size_t i = 0; i < spec.group_axes.size(); ++i) {
    auto a = spec.group_axes[i];
    if (a >= dims) throw ValidationError("group_by", "axis out of range");
    check_edges(spec.edges[i], "group_by[" + std::to_string(i) + "].edges");
    group_edges[a] = &spec.edges[i];
  }
  CellLayout layout;
  layout.stride.assign(dims, 0);
  for (std::size_t d = dims; d-- > 0;) {
    if (!group_edges[d]) continue;
    layout.stride[d] = layout.cells;
    layout.cells *= group_edges[d]->size() - 1;
  }

  // Filter run combinations.
  std::vector<Combo> combos;
  std::size_t n_combos = 1;
  for (const auto& runs : spec.filter) n_combos *= runs.size();
  for (std::size_t k = 0; k < n_combos; ++k) {
    Combo c;
    c.hull = Rect(dims);
    bool empty = false;
    std::size_t rest = k;
    for (std::size_t d = dims; d-- > 0;) {
      const auto& runs = spec.filter[d];
      const Interval run = runs[rest % runs.size()];
      rest /= runs.size();
      std::vector<double> e;
      if (group_edges[d]) {
        for (double x : *group_edges[d]) e.push_back(std::clamp(x, run.lo, run.hi));
      } else {
        e = {run.lo, run.hi};
      }
      c.hull[d] = {e.front(), e.back()};
      empty = empty || !(e.front() < e.back());
      std::vector<char> on(e.size() - 1);
      for (std::size_t t = 0; t + 1 < e.size(); ++t) on[t] = e[t] < e[t + 1];
      std::vector<ScaleCoord> sc;
      for (double x : e) sc.push_back(to_scale(index.axes[d], x));
      c.edges.insert(c.edges.begin(), std::move(e));
      c.active.insert(c.active.begin(), std::move(on));
      c.coords.insert(c.coords.begin(), std::move(sc));
    }
    if (!empty) combos.push_back(std::move(c));
  }

  // Work items: (combo, leaf or node) in a fixed order.
  std::vector<std::pair<std::size_t, std::uint32_t>> items;
  std::vector<char> seen(index.tree.nodes().size(), 0);
  std::size_t distinct = 0;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    std::vector<std::uint32_t> found;
    if (index.tree.empty()) {
    } else if (level > 0) {
      found = index.tree.intersecting(combos[k].hull, level);
    } else if (spec.accuracy.mode == CandidateMode::lsh) {
      found = lsh_candidates(index, combos[k].hull);
    } else {
      found = tree_candidates(index, combos[k].hull);
    }
    for (auto f : found) {
      auto node = level > 0 ? f : index.tree.leaves()[f];
      if (!seen[node]) {
        seen[node] = 1;
        ++distinct;
      }
      items.emplace_back(k, f);
    }
  }

  // Histogram parts of inner nodes, from the leaves below them.
  std::vector<std::vector<HistogramComponent>> node_parts(seen.size());
  if (level > 0 && m.kind == MeasureKind::median) {
    for (std::size_t id = 0; id < seen.size(); ++id) {
      if (!seen[id]) continue;
      for (auto leaf : index.tree.leaves_below(static_cast<std::uint32_t>(id))) {
        const auto& ih = index.ihs[leaf];
        auto t = ih.total();
        HistogramComponent p{ih.hist_binning(), {}};
        for (auto v : t.histogram()) p.mass.push_back(static_cast<double>(v));
        node_parts[id].push_back(std::move(p));
      }
    }
  }

  const bool flags = level == 0;
  std::size_t block = std::max<std::size_t>(1, options.block);
  const std::size_t max_blocks = std::max<std::size_t>(1, kMaxCells / layout.cells);
  block = std::max(block, (items.size() + max_blocks - 1) / max_blocks);
  const std::size_t n_blocks = (items.size() + block - 1) / block;
  struct Partial {
    Accum nearest, inner, outer;
  };
  std::vector<Partial> partials(n_blocks);

  auto run_block = [&](std::size_t b) {
    auto& p = partials[b];
    p.nearest.init(layout.cells, m, flags);
    if (bounds) {
      p.inner.init(layout.cells, m, false);
      p.outer.init(layout.cells, m, false);
    }
    DescriptorGrid grid;
    const std::size_t end = std::min(items.size(), (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      const auto& combo = combos[items[i].first];
      const auto id = items[i].second;
      if (level > 0) {
        add_node(index, spec, layout, combo, id, node_parts[id], p.nearest,
                 bounds ? &p.inner : nullptr, bounds ? &p.outer : nullptr);
        continue;
      }
      add_leaf(index, spec, layout, combo, id, Rounding::nearest, p.nearest, grid, flags);
      if (bounds) {
        add_leaf(index, spec, layout, combo, id, Rounding::inner, p.inner, grid, false);
        add_leaf(index, spec, layout, combo, id, Rounding::outer, p.outer, grid, false);
      }
    }
  };
  if (options.parallel && n_blocks > 1) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  }

  Accum nearest, inner, outer;
  nearest.init(layout.cells, m, flags);
  if (bounds) {
    inner.init(layout.cells, m, false);
    outer.init(layout.cells, m, false);
  }
  for (auto& p : partials) {
    nearest.add(std::move(p.nearest));
    if (bounds) {
      inner.add(std::move(p.inner));
      outer.add(std::move(p.outer));
    }
  }

  // Reorder cells from index order to request order.
  QueryResult r;
  r.edges = spec.edges;
  for (const auto& e : spec.edges) r.shape.push_back(e.size() - 1);
  r.values.resize(layout.cells);
  r.has_bounds = bounds;
  if (bounds) {
    r.lower.resize(layout.cells);
    r.upper.resize(layout.cells);
    r.error.resize(layout.cells);
  }
  std::size_t coincident = 0;
  std::vector<std::size_t> idx(r.shape.size(), 0);
  for (std::size_t out = 0; out < layout.cells; ++out) {
    std::size_t g = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) g += idx[i] * layout.stride[spec.group_axes[i]];
    r.values[out] = estimate(nearest, g, m);
    if (flags) coincident += nearest.coincident[g] != 0;
    if (bounds) {
      if (m.kind == MeasureKind::mean) {
        if (outer.count[g] > 0.0) r.lower[out] = inner.sum[g] / outer.count[g];
        if (inner.count[g] > 0.0) r.upper[out] = outer.sum[g] / inner.count[g];
      } else {
        r.lower[out] = estimate(inner, g, m);
        r.upper[out] = estimate(outer, g, m);
      }
      const auto& v = r.values[out];
      if (v && *v > 0.0 && r.lower[out] && r.upper[out]) {
        r.error[out] = (*r.upper[out] - *r.lower[out]) / *v;
      }
    }
    for (std::size_t i = idx.size(); i-- > 0;) {
      if (++idx[i] < r.shape[i]) break;
      idx[i] = 0;
    }
  }
  r.meta.candidates = distinct;
  if (flags) {
    r.meta.coincident_fraction =
        static_cast<double>(coincident) / static_cast<double>(layout.cells);
  }
  r.meta.elapsed_us = std::chrono::duration<double, std::micro>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return r;
}

}  // namespace ihcube
