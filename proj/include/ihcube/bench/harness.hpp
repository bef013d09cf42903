#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihcube/config.hpp"
#include "ihcube/index.hpp"
#include "ihcube/query.hpp"

namespace ihcube::bench {

enum class WorkloadPolicy { random, zoom, brush };

std::string to_string(WorkloadPolicy p);
std::optional<WorkloadPolicy> parse_workload_policy(const std::string& s);

struct WorkloadSpec {
  std::size_t queries = 200;
  WorkloadPolicy policy = WorkloadPolicy::random;
  /// Grouped dimensions per query (capped at the index dimension count).
  std::uint32_t group_dims = 2;
  std::uint32_t bins = 10;
  /// Range extent as a fraction of each domain.
  double min_extent = 0.2, max_extent = 0.8;
  /// Chance that an ungrouped dimension gets a range filter.
  double filter_probability = 0.5;
  MeasureKind measure = MeasureKind::count;
  std::string measure_dim;
  std::uint64_t seed = 11;
};

struct WorkloadQuery {
  QueryRequest request;
  bool aligned = true;
};

/// Seeded query sequence over the numeric index dimensions. Group ranges
/// are random reals; `aligned` sets align_scales so the engine snaps them
/// to the scale lattice, otherwise they are used as given.
std::vector<WorkloadQuery> make_workload(const Index& index, const WorkloadSpec& spec,
                                         bool aligned);

/// Box filters drawn uniformly inside the domain, for candidate tests.
std::vector<Rect> random_rects(std::span<const DimensionSpec> axes, std::size_t n,
                               double min_extent, double max_extent, std::uint64_t seed);

struct Summary {
  std::size_t n = 0;
  double median = 0, mean = 0, stdev = 0, p90 = 0, min = 0, max = 0;
};
Summary summarize(std::vector<double> xs);
Json summary_to_json(const Summary& s);

/// Engine time of `request`: the minimum over `repeats` runs, in
/// microseconds. Minimums are steadier than single runs on a busy host.
double engine_latency_us(const Index& index, const QuerySpec& spec, int repeats,
                         const ExecOptions& options);

struct Evaluation {
  double are = 0.0;
  double latency_us = 0.0;
  std::optional<double> coincident_fraction;
  std::size_t candidates = 0;
};

/// Runs one request against the engine and the scan oracle over `points`.
Evaluation evaluate(const Index& index, std::span<const DataPoint> points,
                    const QueryRequest& request, int repeats = 1,
                    const ExecOptions& options = {});

/// Recall of `found` against `truth`; 1 when truth is empty.
double recall(std::span<const std::uint32_t> found, std::span<const std::uint32_t> truth);

/// Writes rows of a tab-separated table with a header.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

std::string fmt(double x, int precision = 6);

}  // namespace ihcube::bench
