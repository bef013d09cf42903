#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ihcube/bench/harness.hpp"
#include "ihcube/bench/splom.hpp"

namespace ihcube::bench {

enum class ExperimentKind {
  construction_scaling,
  height_tradeoff,
  lsh_vs_tree,
  scale_alignment,
  latency,
};

std::string to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& s);

struct ExperimentConfig {
  SplomSpec data;
  /// Columns of `data` plus build and LSH settings.
  SchemaConfig schema;
  WorkloadSpec workload;
  std::vector<std::uint64_t> rows;        // construction_scaling
  std::vector<std::uint32_t> tables;      // lsh_vs_tree recall curve
  std::vector<std::uint32_t> bins_curve;  // scale_alignment
  std::size_t rect_queries = 1000;        // lsh_vs_tree
  int repeats = 3;
  /// Workload variant for height_tradeoff, lsh_vs_tree and latency.
  bool aligned = true;
  /// Bucket width in scale units for the single-sample recall curve of
  /// lsh_vs_tree; the default width makes those collisions too rare to see.
  double point_bucket_width = 10.0;
  /// Also time queries through the HTTP server on a loopback port.
  bool end_to_end = false;
};

/// Defaults sized for a desk machine; see the README for each experiment.
ExperimentConfig default_experiment_config(ExperimentKind kind);

/// Overrides defaults with keys data, build, lsh, descriptor, workload,
/// rows, tables, bins_curve, rect_queries, repeats, end_to_end.
ExperimentConfig parse_experiment_config(ExperimentKind kind, const Json& j);

Index build_splom_index(const SplomSpec& data, const SchemaConfig& schema);

struct ConstructionPoint {
  std::uint64_t rows = 0;
  BuildStats stats;
  Summary latency_us;
};

struct HeightPoint {
  std::uint32_t height = 0;
  Summary are, latency_us;
};

struct TablesPoint {
  std::uint32_t tables = 0;
  bool cover_segments = true;
  Summary recall;
};

struct LshComparison {
  std::size_t queries = 0;
  std::size_t violations = 0;  // validated LSH candidates outside the exact set
  Summary recall;
  std::vector<TablesPoint> curve;
  Summary lsh_latency_us, tree_latency_us;
  Summary lsh_are, tree_are;
};

struct AlignmentPoint {
  std::uint32_t bins = 0;
  double aligned_are = 0, unaligned_are = 0;
  double aligned_coincident = 0, unaligned_coincident = 0;
};

struct AlignmentComparison {
  std::size_t queries = 0;
  AlignmentPoint main;
  std::vector<AlignmentPoint> curve;
};

struct LatencyReport {
  std::uint64_t rows = 0;
  Summary engine_us;
  std::optional<Summary> end_to_end_us;
};

std::vector<ConstructionPoint> construction_scaling(const ExperimentConfig& c);
std::vector<HeightPoint> height_tradeoff(const ExperimentConfig& c);
LshComparison lsh_vs_tree(const ExperimentConfig& c);
AlignmentComparison scale_alignment(const ExperimentConfig& c);
LatencyReport latency_profile(const ExperimentConfig& c);

/// Time of each request through a loopback HTTP round trip, in microseconds.
std::vector<double> http_latencies_us(const Index& index,
                                      const std::vector<WorkloadQuery>& queries);

struct Report {
  Json data;
  std::string text;
  std::map<std::string, std::pair<std::vector<std::string>,
                                  std::vector<std::vector<std::string>>>> tables;
};

Report run_experiment(ExperimentKind kind, const ExperimentConfig& c);
/// Writes report.json, report.txt and one .tsv per table into `dir`.
void write_report(const Report& r, const std::string& dir);

}  // namespace ihcube::bench
