#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ihcube/grid.hpp"
#include "ihcube/index.hpp"

namespace ihcube {

enum class CandidateMode { lsh, tree, tree_at_height };

/// How candidate subspaces are found. `tree_at_height` answers from the
/// nodes `height` levels below the root (height == tree height means the
/// leaves) by apportioning node totals over the overlapped volume.
struct AccuracyMode {
  CandidateMode mode = CandidateMode::tree;
  std::uint32_t height = 0;

  /// "lsh", "tree" or "tree@<h>".
  static AccuracyMode parse(const std::string& s);
  std::string to_string() const;
  friend bool operator==(const AccuracyMode&, const AccuracyMode&) = default;
};

struct GroupSpec {
  std::string dim;
  BinStrategy strategy = BinStrategy::equi_width;
  std::uint32_t bins = 10;
  std::vector<double> edges;  // explicit strategy only
};

/// A query in terms of dimension names, as clients send it.
struct QueryRequest {
  std::map<std::string, Interval> ranges;
  std::map<std::string, std::vector<std::string>> categories;
  std::vector<GroupSpec> group_by;
  MeasureKind measure = MeasureKind::count;
  std::string measure_dim;
  AccuracyMode accuracy;
  bool want_error_bounds = false;
  bool align_scales = true;
};

/// A query resolved against an index: per-axis filter runs and final cell
/// edges. Cells are [e_t, e_t+1), closed on the right only at the domain
/// maximum.
struct QuerySpec {
  /// Per index axis, disjoint ascending intervals; empty means nothing
  /// passes the filter.
  std::vector<std::vector<Interval>> filter;
  std::vector<std::size_t> group_axes;       // request order
  std::vector<std::vector<double>> edges;    // per group axis
  Measure measure;
  AccuracyMode accuracy;
  bool want_error_bounds = false;

  /// Unfiltered, ungrouped count over the whole domain.
  static QuerySpec full(const Index& index);
};

struct QueryMeta {
  double elapsed_us = 0.0;
  std::size_t candidates = 0;
  /// Share of cells whose edges needed no rounding in any candidate leaf;
  /// unset when answering from inner nodes.
  std::optional<double> coincident_fraction;
};

/// Row-major grid over the group dimensions (a single cell when there are
/// none). Empty markers are nullopt.
struct QueryResult {
  std::vector<std::size_t> shape;
  std::vector<std::vector<double>> edges;
  std::vector<std::optional<double>> values;
  bool has_bounds = false;
  std::vector<std::optional<double>> lower, upper, error;
  QueryMeta meta;
};

struct ExecOptions {
  bool parallel = true;
  /// Candidates per reduction block; results do not depend on it being
  /// run serially or in parallel, only on its value.
  std::size_t block = 16;
};

/// Resolves names, labels and binning strategies. Throws ValidationError
/// naming the offending field, UnsupportedError for bounds the measure
/// cannot give.
QuerySpec plan_query(const Index& index, const QueryRequest& request,
                     const ExecOptions& options = {});

QueryResult execute(const Index& index, const QuerySpec& spec,
                    const ExecOptions& options = {});

inline QueryResult execute(const Index& index, const QueryRequest& request,
                           const ExecOptions& options = {}) {
  return execute(index, plan_query(index, request, options), options);
}

/// Leaf indices whose MBR intersects `r`, found by LSH then validated.
std::vector<std::uint32_t> lsh_candidates(const Index& index, const Rect& r);
/// Leaf indices whose MBR intersects `r`, by tree descent.
std::vector<std::uint32_t> tree_candidates(const Index& index, const Rect& r);

}  // namespace ihcube
