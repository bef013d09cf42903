#pragma once

#include <cstdint>
#include <vector>

#include "ihcube/descriptor.hpp"
#include "ihcube/integral_histogram.hpp"
#include "ihcube/lsh.hpp"
#include "ihcube/rtree.hpp"
#include "ihcube/schema.hpp"

namespace ihcube {

struct BuildStats {
  std::uint64_t rows = 0;
  std::uint64_t storage_bytes = 0;  // serialized index size
  double build_seconds = 0.0;
  std::uint32_t tree_height = 0;
  std::uint64_t subspaces = 0;
  std::uint64_t bins = 0;  // integral histogram cells over all subspaces
  std::uint64_t skeleton_points = 0;

  friend bool operator==(const BuildStats&, const BuildStats&) = default;
};

/// A finalized, immutable index: tree topology, one integral histogram per
/// leaf and the LSH buckets over leaf MBRs.
struct Index {
  Schema schema;
  std::vector<DimensionSpec> axes;  // indexed dimensions, in index order
  DescriptorLayout layout;
  Tree tree;
  std::vector<IntegralHistogram> ihs;          // by leaf index
  std::vector<FeatureDescriptor> node_totals;  // by node id
  LshIndex lsh;
  BuildStats stats;

  /// Recomputes `axes` and `node_totals` from the schema, tree and tables.
  void derive();
  std::uint64_t total_count() const;
};

}  // namespace ihcube
