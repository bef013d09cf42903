#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "ihcube/geometry.hpp"
#include "ihcube/schema.hpp"

namespace ihcube {

struct LshParams {
  /// 0 selects 2 * d.
  std::uint32_t projections = 0;
  std::uint32_t tables = 8;
  /// Bucket width in scale units; 0 selects diagonal / 64.
  double bucket_width = 0.0;
  std::uint64_t seed = 7;
  /// Hash every bucket that a sample's share of the projected interval
  /// touches rather than a single sample position.
  bool cover_segments = true;
};

/// Gaussian projections with uniform offsets: h(v) = floor((a.v + b) / r).
struct LshFamily {
  std::vector<std::vector<double>> projections;
  std::vector<double> offsets;
  double bucket_width = 1.0;

  static LshFamily draw(std::size_t dims, std::size_t count, double width,
                        std::uint64_t seed);

  std::vector<std::int64_t> hash_point(std::span<const double> v) const;
  std::int64_t key(std::size_t j, double projected) const;
  /// [min, max] of a.v over the box.
  std::pair<double, double> project(std::size_t j, const Rect& box) const;
};

/// Leaf ids bucketed per (projection, table).
class LshIndex {
 public:
  using BucketMap = std::unordered_map<std::int64_t, std::vector<std::uint32_t>>;

  LshIndex() = default;

  /// `leaves[i]` is the MBR of leaf i in real coordinates; hashing works in
  /// scale-unit positions so that every axis has comparable spread.
  static LshIndex build(std::span<const DimensionSpec> axes,
                        std::span<const Rect> leaves, const LshParams& params);

  /// Leaves colliding with the query on every projection (unvalidated).
  std::vector<std::uint32_t> candidates(std::span<const DimensionSpec> axes,
                                        const Rect& query) const;

  const LshParams& params() const { return params_; }
  const LshFamily& family() const { return family_; }
  std::size_t leaf_count() const { return leaf_count_; }
  /// buckets()[j * tables + t]
  const std::vector<BucketMap>& buckets() const { return buckets_; }
  bool empty() const { return leaf_count_ == 0; }

  static LshIndex from_parts(LshParams params, LshFamily family,
                             std::size_t leaf_count,
                             std::vector<BucketMap> buckets);

 private:
  // Bucket keys sample t of a projected interval maps to.
  std::pair<std::int64_t, std::int64_t> sample_keys(std::size_t j, double lo,
                                                    double hi,
                                                    std::size_t t) const;

  LshParams params_;
  LshFamily family_;
  std::size_t leaf_count_ = 0;
  std::vector<BucketMap> buckets_;
};

/// Rect converted to scale-unit positions per axis.
Rect to_positions(std::span<const DimensionSpec> axes, const Rect& r);

}  // namespace ihcube
