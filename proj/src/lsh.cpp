#include "ihcube/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ihcube/error.hpp"

namespace ihcube {

LshFamily LshFamily::draw(std::size_t dims, std::size_t count, double width,
                          std::uint64_t seed) {
  if (!(width > 0.0)) throw ValidationError("lsh.bucket_width", "must be > 0");
  if (count == 0) throw ValidationError("lsh.projections", "must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> offset(0.0, width);
  LshFamily f;
  f.bucket_width = width;
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<double> a(dims);
    for (auto& x : a) x = gauss(rng);
    f.projections.push_back(std::move(a));
    f.offsets.push_back(offset(rng));
  }
  return f;
}

std::int64_t LshFamily::key(std::size_t j, double projected) const {
  return static_cast<std::int64_t>(
      std::floor((projected + offsets[j]) / bucket_width));
}

std::vector<std::int64_t> LshFamily::hash_point(std::span<const double> v) const {
  std::vector<std::int64_t> keys;
  keys.reserve(projections.size());
  for (std::size_t j = 0; j < projections.size(); ++j) {
    double dot = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) dot += projections[j][d] * v[d];
    keys.push_back(key(j, dot));
  }
  return keys;
}

std::pair<double, double> LshFamily::project(std::size_t j,
                                             const Rect& box) const {
  double lo = 0.0, hi = 0.0;
  for (std::size_t d = 0; d < box.dims(); ++d) {
    double a = projections[j][d];
    double x = a * box[d].lo, y = a * box[d].hi;
    lo += std::min(x, y);
    hi += std::max(x, y);
  }
  return {lo, hi};
}

Rect to_positions(std::span<const DimensionSpec> axes, const Rect& r) {
  Rect out(r.dims());
  for (std::size_t d = 0; d < r.dims(); ++d) {
    out[d] = {axes[d].position(r[d].lo), axes[d].position(r[d].hi)};
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> LshIndex::sample_keys(std::size_t j,
                                                            double lo, double hi,
                                                            std::size_t t) const {
  const double n = static_cast<double>(params_.tables);
  const double len = hi - lo;
  if (params_.cover_segments) {
    double a = lo + len * static_cast<double>(t) / n;
    double b = (t + 1 == params_.tables) ? hi
                                          : lo + len * static_cast<double>(t + 1) / n;
    return {family_.key(j, a), family_.key(j, b)};
  }
  auto k = family_.key(j, lo + len * (static_cast<double>(t) + 0.5) / n);
  return {k, k};
}

LshIndex LshIndex::build(std::span<const DimensionSpec> axes,
                         std::span<const Rect> leaves, const LshParams& params) {
  LshIndex idx;
  idx.params_ = params;
  if (params.tables == 0) throw ValidationError("lsh.tables", "must be >= 1");
  const std::size_t dims = axes.size();
  if (idx.params_.projections == 0) {
    idx.params_.projections = static_cast<std::uint32_t>(2 * dims);
  }
  if (idx.params_.bucket_width <= 0.0) {
    double diag = 0.0;
    for (const auto& a : axes) diag += double(a.scale_count) * a.scale_count;
    idx.params_.bucket_width = std::sqrt(diag) / 64.0;
  }
  idx.family_ = LshFamily::draw(dims, idx.params_.projections,
                                idx.params_.bucket_width, idx.params_.seed);
  idx.leaf_count_ = leaves.size();
  const std::size_t tables = idx.params_.tables;
  idx.buckets_.assign(idx.params_.projections * tables, {});
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    Rect pos = to_positions(axes, leaves[i]);
    for (std::size_t j = 0; j < idx.params_.projections; ++j) {
      auto [lo, hi] = idx.family_.project(j, pos);
      // Samples in ascending order of position: sample t -> table t.
      for (std::size_t t = 0; t < tables; ++t) {
        auto [k0, k1] = idx.sample_keys(j, lo, hi, t);
        for (auto k = k0; k <= k1; ++k) {
          idx.buckets_[j * tables + t][k].push_back(static_cast<std::uint32_t>(i));
        }
      }
    }
  }
  return idx;
}

LshIndex LshIndex::from_parts(LshParams params, LshFamily family,
                              std::size_t leaf_count,
                              std::vector<BucketMap> buckets) {
  LshIndex idx;
  idx.params_ = params;
  idx.family_ = std::move(family);
  idx.leaf_count_ = leaf_count;
  idx.buckets_ = std::move(buckets);
  if (idx.buckets_.size() !=
      std::size_t{idx.params_.projections} * idx.params_.tables) {
    throw FormatError("LSH bucket table count mismatch");
  }
  return idx;
}

std::vector<std::uint32_t> LshIndex::candidates(
    std::span<const DimensionSpec> axes, const Rect& query) const {
  std::vector<std::uint32_t> out;
  if (leaf_count_ == 0 || query.is_empty()) return out;
  Rect pos = to_positions(axes, query);
  const std::size_t tables = params_.tables;
  // hits[i] counts projections on which leaf i collided.
  std::vector<std::uint32_t> hits(leaf_count_, 0);
  std::vector<std::uint32_t> stamp(leaf_count_, 0);
  for (std::size_t j = 0; j < params_.projections; ++j) {
    auto [lo, hi] = family_.project(j, pos);
    const std::uint32_t mark = static_cast<std::uint32_t>(j + 1);
    // Query samples in descending order: sample tables-1-t -> table t.
    for (std::size_t t = 0; t < tables; ++t) {
      auto [k0, k1] = sample_keys(j, lo, hi, tables - 1 - t);
      const auto& map = buckets_[j * tables + t];
      for (auto k = k0; k <= k1; ++k) {
        auto it = map.find(k);
        if (it == map.end()) continue;
        for (auto leaf : it->second) {
          if (stamp[leaf] != mark && hits[leaf] == j) {
            stamp[leaf] = mark;
            ++hits[leaf];
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < leaf_count_; ++i) {
    if (hits[i] == params_.projections) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

}  // namespace ihcube
