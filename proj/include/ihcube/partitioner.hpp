#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ihcube/index.hpp"

namespace ihcube {

struct BuildConfig {
  RTreeConfig tree;
  /// Fraction of rows inserted exactly before the tree is frozen.
  double sample_rate = 1.0;
  /// Upper bound on the expected skeleton size; 0 disables the cap.
  std::uint64_t max_sample = 20000;
  ResolutionPolicy resolution;
  DescriptorLayout layout;
  LshParams lsh;
  std::uint64_t seed = 42;
  bool parallel = true;

  void validate(const Schema& schema) const;
};

/// Re-iterable stream of points. The builder scans it up to four times;
/// every scan must yield the same rows in the same order.
class PointSource {
 public:
  virtual ~PointSource() = default;
  virtual void scan(const std::function<void(const DataPoint&)>& fn) const = 0;
  /// Row count when known without a scan.
  virtual std::optional<std::uint64_t> size() const { return std::nullopt; }
};

class VectorSource : public PointSource {
 public:
  explicit VectorSource(std::span<const DataPoint> points) : points_(points) {}
  void scan(const std::function<void(const DataPoint&)>& fn) const override {
    for (const auto& p : points_) fn(p);
  }
  std::optional<std::uint64_t> size() const override { return points_.size(); }

 private:
  std::span<const DataPoint> points_;
};

/// Two-phase build: an exact R*-tree over a uniform sample, then split-free
/// routing of every remaining row with leaf MBR growth, then accumulation
/// of all rows into per-leaf integral histograms.
Index build_index(const Schema& schema, const PointSource& source,
                  const BuildConfig& cfg);

/// Leaf chosen for a point in the accumulation pass: the containing leaf of
/// least area, then lowest id. kNoNode when none contains it.
std::uint32_t assign_leaf(const Tree& tree, std::span<const double> scale,
                          std::span<const double> p);

}  // namespace ihcube
