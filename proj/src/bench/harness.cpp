#include "ihcube/bench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "ihcube/error.hpp"
#include "ihcube/oracle.hpp"

namespace ihcube::bench {

std::string to_string(WorkloadPolicy p) {
  switch (p) {
    case WorkloadPolicy::random: return "random";
    case WorkloadPolicy::zoom: return "zoom";
    case WorkloadPolicy::brush: return "brush";
  }
  return "random";
}

std::optional<WorkloadPolicy> parse_workload_policy(const std::string& s) {
  if (s == "random") return WorkloadPolicy::random;
  if (s == "zoom") return WorkloadPolicy::zoom;
  if (s == "brush") return WorkloadPolicy::brush;
  return std::nullopt;
}

std::vector<WorkloadQuery> make_workload(const Index& index, const WorkloadSpec& spec,
                                         bool aligned) {
  std::vector<std::size_t> numeric;
  for (std::size_t a = 0; a < index.axes.size(); ++a) {
    if (index.axes[a].kind == DimensionKind::numeric) numeric.push_back(a);
  }
  if (numeric.empty()) throw ValidationError("workload", "index has no numeric dimension");
  const std::size_t groups = std::min<std::size_t>(spec.group_dims, numeric.size());

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto extent = [&] { return spec.min_extent + (spec.max_extent - spec.min_extent) * u(rng); };

  auto base = [&] {
    QueryRequest q;
    q.measure = spec.measure;
    q.measure_dim = spec.measure_dim;
    q.align_scales = aligned;
    return q;
  };
  auto set_range = [&](QueryRequest& q, std::size_t axis, double center, double e) {
    const auto& d = index.axes[axis];
    const double w = e * d.width();
    double lo = std::clamp(center - w / 2, d.domain_min, d.domain_max - w);
    q.ranges[d.name] = {lo, std::min(lo + w, d.domain_max)};
  };
  auto group = [&](QueryRequest& q, std::size_t axis) {
    q.group_by.push_back({index.axes[axis].name, BinStrategy::equi_width, spec.bins, {}});
  };

  std::vector<WorkloadQuery> out;
  std::vector<std::size_t> order = numeric;
  // zoom and brush keep state across queries
  std::vector<double> centers;
  double zoom = 1.0, brush_pos = 0.0, brush_extent = 0.0;

  for (std::size_t i = 0; i < spec.queries; ++i) {
    QueryRequest q = base();
    switch (spec.policy) {
      case WorkloadPolicy::random: {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 0; k < order.size(); ++k) {
          const std::size_t a = order[k];
          const double e = extent();
          const double c = e / 2 + (1 - e) * u(rng);
          const double pick = u(rng);
          const auto& d = index.axes[a];
          if (k < groups) {
            set_range(q, a, d.domain_min + c * d.width(), e);
            group(q, a);
          } else if (pick < spec.filter_probability) {
            set_range(q, a, d.domain_min + c * d.width(), e);
          }
        }
        break;
      }
      case WorkloadPolicy::zoom: {
        if (centers.empty() || zoom < spec.min_extent) {
          centers.clear();
          for (std::size_t k = 0; k < groups; ++k) centers.push_back(0.1 + 0.8 * u(rng));
          zoom = 1.0;
        }
        for (std::size_t k = 0; k < groups; ++k) {
          const auto& d = index.axes[numeric[k]];
          set_range(q, numeric[k], d.domain_min + centers[k] * d.width(), zoom);
          group(q, numeric[k]);
        }
        zoom *= 0.8;
        break;
      }
      case WorkloadPolicy::brush: {
        if (brush_extent == 0.0 || brush_pos > 1.0) {
          brush_extent = extent();
          brush_pos = 0.0;
        }
        const std::size_t brushed = numeric.size() > groups ? numeric[groups] : numeric[0];
        const auto& d = index.axes[brushed];
        set_range(q, brushed, d.domain_min + (brush_pos + brush_extent / 2) * d.width(),
                  brush_extent);
        for (std::size_t k = 0; k < groups; ++k) group(q, numeric[k]);
        brush_pos += 0.05;
        break;
      }
    }
    out.push_back({std::move(q), aligned});
  }
  return out;
}

std::vector<Rect> random_rects(std::span<const DimensionSpec> axes, std::size_t n,
                               double min_extent, double max_extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Rect> out(n, Rect(axes.size()));
  for (auto& r : out) {
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const double e = (min_extent + (max_extent - min_extent) * u(rng)) * axes[a].width();
      const double lo = axes[a].domain_min + (axes[a].width() - e) * u(rng);
      r[a] = {lo, lo + e};
    }
  }
  return out;
}

Summary summarize(std::vector<double> xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stdev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  // nearest-rank percentile
  s.p90 = xs[static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n))) - 1];
  s.min = xs.front();
  s.max = xs.back();
  return s;
}

Json summary_to_json(const Summary& s) {
  return Json{{"n", s.n},        {"median", s.median}, {"mean", s.mean},
              {"stdev", s.stdev}, {"p90", s.p90},      {"min", s.min},
              {"max", s.max}};
}

double engine_latency_us(const Index& index, const QuerySpec& spec, int repeats,
                         const ExecOptions& options) {
  double best = INFINITY;
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    best = std::min(best, execute(index, spec, options).meta.elapsed_us);
  }
  return best;
}

Evaluation evaluate(const Index& index, std::span<const DataPoint> points,
                    const QueryRequest& request, int repeats, const ExecOptions& options) {
  const QuerySpec spec = plan_query(index, request, options);
  const QueryResult got = execute(index, spec, options);
  const QueryResult exact = scan_oracle(index.schema, points, spec, options.parallel);
  Evaluation e;
  e.are = average_relative_error(got.values, exact.values);
  e.latency_us = std::min(got.meta.elapsed_us,
                          repeats > 1 ? engine_latency_us(index, spec, repeats - 1, options)
                                      : INFINITY);
  e.coincident_fraction = got.meta.coincident_fraction;
  e.candidates = got.meta.candidates;
  return e;
}

double recall(std::span<const std::uint32_t> found, std::span<const std::uint32_t> truth) {
  if (truth.empty()) return 1.0;
  std::size_t hit = 0;
  for (auto t : truth) hit += std::binary_search(found.begin(), found.end(), t);
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string fmt(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

}  // namespace ihcube::bench
