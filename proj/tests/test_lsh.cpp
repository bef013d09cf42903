#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ihcube/error.hpp"
#include "ihcube/lsh.hpp"
#include "ihcube/rtree.hpp"

using namespace ihcube;

namespace {

std::vector<DimensionSpec> axes3() {
  return {DimensionSpec::numeric("a", 0.0, 1.0, 360),
          DimensionSpec::numeric("b", -5.0, 5.0, 180),
          DimensionSpec::numeric("c", 0.0, 100.0, 100)};
}

Rect random_box(std::span<const DimensionSpec> axes, std::mt19937_64& rng,
                double max_frac) {
  Rect r(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double len = u(rng) * max_frac * axes[d].width();
    double lo = axes[d].domain_min + u(rng) * (axes[d].width() - len);
    r[d] = {lo, lo + len};
  }
  return r;
}

struct Fixture {
  std::vector<DimensionSpec> axes = axes3();
  Tree tree;
  std::vector<Rect> mbrs;

  explicit Fixture(std::uint64_t seed) {
    RTreeConfig cfg;
    cfg.m_max = 12;
    RTreeBuilder b(axes, cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 4000; ++i) {
      std::vector<double> p(3);
      for (std::size_t d = 0; d < 3; ++d) {
        double mid = 0.5 * (axes[d].domain_min + axes[d].domain_max);
        p[d] = std::clamp(mid + g(rng) * axes[d].width() / 6, axes[d].domain_min,
                          axes[d].domain_max);
      }
      b.insert(p);
    }
    tree = b.freeze();
    for (auto id : tree.leaves()) mbrs.push_back(tree.node(id).mbr);
  }

  std::set<std::uint32_t> exact(const Rect& q) const {
    std::set<std::uint32_t> s;
    for (auto id : tree.intersecting(q)) s.insert(tree.node(id).leaf_index);
    return s;
  }
};

}  // namespace

TEST(LshFamily, HashFormula) {
  LshFamily f;
  f.projections = {{1.0, 0.0}};
  f.offsets = {0.5};
  f.bucket_width = 2.0;
  std::vector<double> v{3.0, 7.0};
  EXPECT_EQ(f.hash_point(v), std::vector<std::int64_t>{1});
  // Same projection, same key.
  std::vector<double> w{3.0, -100.0};
  EXPECT_EQ(f.hash_point(w), f.hash_point(v));
  // Shifting along a by r moves the key by one.
  std::vector<double> shifted{5.0, 7.0};
  EXPECT_EQ(f.hash_point(shifted)[0], 2);
}

TEST(LshFamily, DeterministicDraws) {
  auto a = LshFamily::draw(3, 6, 1.5, 99);
  auto b = LshFamily::draw(3, 6, 1.5, 99);
  EXPECT_EQ(a.projections, b.projections);
  EXPECT_EQ(a.offsets, b.offsets);
  for (double o : a.offsets) {
    EXPECT_GE(o, 0.0);
    EXPECT_LT(o, 1.5);
  }
  EXPECT_THROW(LshFamily::draw(3, 6, 0.0, 1), ValidationError);
  EXPECT_THROW(LshFamily::draw(3, 0, 1.0, 1), ValidationError);
}

TEST(LshIndex, DefaultsAndCompleteness) {
  Fixture fx(1);
  auto idx = LshIndex::build(fx.axes, fx.mbrs, {});
  EXPECT_EQ(idx.params().projections, 6u);
  EXPECT_EQ(idx.params().tables, 8u);
  EXPECT_NEAR(idx.params().bucket_width,
              std::sqrt(360.0 * 360 + 180.0 * 180 + 100.0 * 100) / 64, 1e-12);
  // Every leaf sits in every (projection, table) map.
  for (const auto& map : idx.buckets()) {
    std::set<std::uint32_t> seen;
    for (const auto& [k, ids] : map) seen.insert(ids.begin(), ids.end());
    EXPECT_EQ(seen.size(), fx.mbrs.size());
  }
}

TEST(LshIndex, SingleTableHashesMidpoint) {
  Fixture fx(2);
  LshParams p;
  p.tables = 1;
  p.cover_segments = false;
  auto idx = LshIndex::build(fx.axes, fx.mbrs, p);
  const auto& fam = idx.family();
  for (std::size_t i = 0; i < fx.mbrs.size(); ++i) {
    Rect pos = to_positions(fx.axes, fx.mbrs[i]);
    for (std::size_t j = 0; j < fam.projections.size(); ++j) {
      auto [lo, hi] = fam.project(j, pos);
      auto k = fam.key(j, lo + (hi - lo) * 0.5);
      const auto& ids = idx.buckets()[j].at(k);
      EXPECT_NE(std::find(ids.begin(), ids.end(), i), ids.end());
    }
  }
}

TEST(LshIndex, WideIntervalsSpanManyBuckets) {
  Fixture fx(3);
  auto idx = LshIndex::build(fx.axes, fx.mbrs, {});
  const auto& fam = idx.family();
  const std::size_t tables = idx.params().tables;
  for (std::size_t i = 0; i < fx.mbrs.size(); ++i) {
    Rect pos = to_positions(fx.axes, fx.mbrs[i]);
    for (std::size_t j = 0; j < fam.projections.size(); ++j) {
      auto [lo, hi] = fam.project(j, pos);
      auto k = static_cast<std::size_t>(std::floor((hi - lo) / fam.bucket_width));
      std::set<std::int64_t> keys;
      for (std::size_t t = 0; t < tables; ++t) {
        for (const auto& [key, ids] : idx.buckets()[j * tables + t]) {
          if (std::find(ids.begin(), ids.end(), i) != ids.end()) keys.insert(key);
        }
      }
      EXPECT_GE(keys.size(), k);
    }
  }
}

TEST(LshIndex, FullDomainRecall) {
  Fixture fx(4);
  auto idx = LshIndex::build(fx.axes, fx.mbrs, {});
  Rect full(3);
  for (std::size_t d = 0; d < 3; ++d) full[d] = {fx.axes[d].domain_min, fx.axes[d].domain_max};
  EXPECT_EQ(idx.candidates(fx.axes, full).size(), fx.mbrs.size());
}

TEST(LshIndex, SoundAndCompleteOnRandomRanges) {
  Fixture fx(5);
  auto idx = LshIndex::build(fx.axes, fx.mbrs, {});
  std::mt19937_64 rng(17);
  std::size_t found = 0, truth = 0;
  for (int q = 0; q < 1000; ++q) {
    Rect r = random_box(fx.axes, rng, q % 2 ? 0.1 : 0.5);
    auto ex = fx.exact(r);
    std::set<std::uint32_t> validated;
    for (auto leaf : idx.candidates(fx.axes, r)) {
      if (fx.mbrs[leaf].intersects(r)) validated.insert(leaf);
    }
    for (auto v : validated) ASSERT_TRUE(ex.count(v)) << "query " << q;
    found += validated.size();
    truth += ex.size();
  }
  // Segment coverage makes every overlapping interval collide.
  EXPECT_EQ(found, truth);
}

TEST(LshIndex, PointSamplingRecallGrowsWithTables) {
  Fixture fx(6);
  std::mt19937_64 rng(23);
  std::vector<Rect> queries;
  for (int q = 0; q < 300; ++q) queries.push_back(random_box(fx.axes, rng, 0.2));
  double prev = -1.0;
  for (std::uint32_t tables : {1u, 2u, 4u, 8u, 16u}) {
    LshParams p;
    p.tables = tables;
    p.cover_segments = false;
    auto idx = LshIndex::build(fx.axes, fx.mbrs, p);
    std::size_t found = 0, truth = 0;
    for (const auto& r : queries) {
      auto ex = fx.exact(r);
      truth += ex.size();
      for (auto leaf : idx.candidates(fx.axes, r)) found += ex.count(leaf);
    }
    double recall = truth ? double(found) / double(truth) : 1.0;
    EXPECT_GE(recall, prev - 0.02) << "tables " << tables;
    prev = std::max(prev, recall);
  }
}

TEST(LshIndex, SeparatedQueryIsEmptyAfterValidation) {
  std::vector<DimensionSpec> axes{DimensionSpec::numeric("x", 0.0, 100.0, 100),
                                  DimensionSpec::numeric("y", 0.0, 100.0, 100)};
  std::vector<Rect> mbrs{Rect({{0, 10}, {0, 10}}), Rect({{5, 20}, {5, 15}})};
  auto idx = LshIndex::build(axes, mbrs, {});
  Rect q({{80, 90}, {80, 90}});
  std::size_t validated = 0;
  for (auto leaf : idx.candidates(axes, q)) validated += mbrs[leaf].intersects(q);
  EXPECT_EQ(validated, 0u);
  EXPECT_TRUE(idx.candidates(axes, Rect::empty(2)).empty());
}
