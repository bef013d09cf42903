#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ihcube/error.hpp"
#include "ihcube/rtree.hpp"

using namespace ihcube;

namespace {

std::vector<DimensionSpec> unit_axes(double hi = 10.0) {
  // One scale unit per value unit so areas read as plain numbers.
  auto s = static_cast<std::uint32_t>(hi);
  return {DimensionSpec::numeric("x", 0.0, hi, s),
          DimensionSpec::numeric("y", 0.0, hi, s)};
}

Rect box(double x0, double x1, double y0, double y1) {
  return Rect({{x0, x1}, {y0, y1}});
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Objective, ZeroIffNoGrowth) {
  EXPECT_EQ(insertion_objective(4.0, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(insertion_objective(4.0, 6.0), 3.0);
  EXPECT_NEAR(insertion_objective(9.0, 10.0), 10.0 / 9.0, 1e-12);
  // Degenerate box: the grown area alone.
  EXPECT_EQ(insertion_objective(0.0, 0.0), 0.0);
  EXPECT_EQ(insertion_objective(0.0, 2.5), 2.5);
}

TEST(ChooseSubtree, ContainingChildWins) {
  auto axes = unit_axes();
  auto scale = scale_factors(axes);
  std::vector<Rect> kids{box(0, 1, 0, 1), box(2, 8, 2, 8)};
  std::vector<double> p{5, 5};
  EXPECT_EQ(choose_subtree(kids, p, scale), 1u);
}

TEST(ChooseSubtree, DensityObjectiveDiffersFromAreaChange) {
  auto axes = unit_axes();
  auto scale = scale_factors(axes);
  // A grows 4 -> 5 (objective 1.25); B grows 1 -> 1.9 (objective 1.71).
  // Plain area change would pick B (0.9 < 1).
  std::vector<Rect> kids{box(0, 2, 0, 2), box(3.4, 4.4, 0, 1)};
  std::vector<double> p{2.5, 1.0};
  Rect a = kids[0], b = kids[1];
  a.expand(p);
  b.expand(p);
  EXPECT_DOUBLE_EQ(a.volume(scale), 5.0);
  EXPECT_NEAR(b.volume(scale), 1.9, 1e-12);
  EXPECT_EQ(choose_subtree(kids, p, scale), 0u);
}

TEST(ChooseSubtree, DegeneratePointChild) {
  auto axes = unit_axes();
  auto scale = scale_factors(axes);
  std::vector<Rect> kids{box(0, 4, 0, 4), box(6, 6, 6, 6)};
  std::vector<double> p{6, 6};
  EXPECT_EQ(choose_subtree(kids, p, scale), 1u);
}

TEST(ChooseSubtree, TiesGoToLowerIndex) {
  auto axes = unit_axes();
  auto scale = scale_factors(axes);
  std::vector<Rect> kids{box(0, 2, 0, 2), box(0, 2, 0, 2)};
  std::vector<double> p{1, 1};
  EXPECT_EQ(choose_subtree(kids, p, scale), 0u);
}

TEST(RTree, ForcedSplit) {
  RTreeConfig cfg;
  cfg.m_max = 8;
  RTreeBuilder b(unit_axes(), cfg);
  for (int i = 0; i <= 8; ++i) b.insert(std::vector<double>{double(i), double(i)});
  EXPECT_EQ(b.check(), "");
  auto t = b.freeze();
  ASSERT_EQ(t.leaf_count(), 2u);
  EXPECT_EQ(t.height(), 2u);
  for (auto id : t.leaves()) {
    EXPECT_GE(t.node(id).count, cfg.min_fill());
    EXPECT_LE(t.node(id).count, cfg.m_max);
  }
}

TEST(RTree, ConservationAndStructure) {
  RTreeConfig cfg;
  cfg.m_max = 16;
  auto axes = unit_axes(100.0);
  RTreeBuilder b(axes, cfg);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 5000; ++i) {
    pts.push_back({u(rng), u(rng)});
    b.insert(pts.back());
    if (i % 997 == 0) ASSERT_EQ(b.check(), "") << "after " << i;
  }
  ASSERT_EQ(b.check(), "");
  auto t = b.freeze();
  std::uint64_t total = 0;
  for (auto id : t.leaves()) {
    total += t.node(id).count;
    EXPECT_EQ(t.node(id).level, 0u);
  }
  EXPECT_EQ(total, pts.size());
  EXPECT_EQ(t.node(t.root()).count, pts.size());
  // Every point is covered by some leaf.
  for (const auto& p : pts) EXPECT_FALSE(t.containing_leaves(p).empty());
  // Parents precede children; children nest inside parents.
  for (const auto& n : t.nodes()) {
    for (auto c : n.children) {
      EXPECT_GT(c, n.id);
      EXPECT_EQ(t.node(c).parent, n.id);
      EXPECT_TRUE(n.mbr.contains(t.node(c).mbr));
    }
  }
}

TEST(RTree, IntersectingMatchesBruteForce) {
  RTreeConfig cfg;
  cfg.m_max = 10;
  auto axes = unit_axes(100.0);
  RTreeBuilder b(axes, cfg);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 3000; ++i) b.insert(std::vector<double>{u(rng), u(rng)});
  auto t = b.freeze();
  for (int q = 0; q < 200; ++q) {
    double x0 = u(rng), y0 = u(rng);
    Rect r = box(x0, x0 + u(rng) / 4, y0, y0 + u(rng) / 4);
    for (std::uint32_t level = 0; level < t.height(); ++level) {
      std::vector<std::uint32_t> brute;
      for (const auto& n : t.nodes()) {
        if (n.level == level && n.mbr.intersects(r)) brute.push_back(n.id);
      }
      EXPECT_EQ(t.intersecting(r, level), brute);
    }
  }
  EXPECT_TRUE(t.intersecting(Rect::empty(2)).empty());
}

TEST(RTree, LeavesBelowPartitionsLeaves) {
  RTreeConfig cfg;
  cfg.m_max = 6;
  RTreeBuilder b(unit_axes(100.0), cfg);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 800; ++i) b.insert(std::vector<double>{u(rng), u(rng)});
  auto t = b.freeze();
  ASSERT_GE(t.height(), 3u);
  std::vector<std::uint32_t> all;
  for (const auto& n : t.nodes()) {
    if (n.level != 1) continue;
    auto below = t.leaves_below(n.id);
    all.insert(all.end(), below.begin(), below.end());
  }
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), t.leaf_count());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(t.leaves_below(t.root()).size(), t.leaf_count());
}

TEST(RTree, DenseRegionsGetSmallerLeaves) {
  RTreeConfig cfg;
  cfg.m_max = 16;
  RTreeBuilder b(unit_axes(100.0), cfg);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dense(25.0, 3.0), sparse(70.0, 12.0);
  auto clamp = [](double v) { return std::clamp(v, 0.0, 100.0); };
  for (int i = 0; i < 6000; ++i) {
    bool d = i % 4 != 0;  // 3:1 mass, much tighter spread
    auto& g = d ? dense : sparse;
    b.insert(std::vector<double>{clamp(g(rng)), clamp(g(rng))});
  }
  auto t = b.freeze();
  auto scale = scale_factors(unit_axes(100.0));
  std::vector<double> dense_area, sparse_area;
  for (auto id : t.leaves()) {
    const auto& m = t.node(id).mbr;
    double cx = 0.5 * (m[0].lo + m[0].hi), cy = 0.5 * (m[1].lo + m[1].hi);
    double to_dense = std::hypot(cx - 25, cy - 25), to_sparse = std::hypot(cx - 70, cy - 70);
    (to_dense < to_sparse ? dense_area : sparse_area).push_back(m.volume(scale));
  }
  ASSERT_FALSE(dense_area.empty());
  ASSERT_FALSE(sparse_area.empty());
  EXPECT_LT(median(dense_area), median(sparse_area));
}

TEST(RTree, ConfigValidation) {
  RTreeConfig cfg;
  EXPECT_EQ(cfg.min_fill(), 26u);
  cfg.m_max = 2;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.m_max = 10;
  cfg.m_min = 6;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Tree, ExpandLeafPropagatesToRoot) {
  RTreeConfig cfg;
  cfg.m_max = 4;
  RTreeBuilder b(unit_axes(), cfg);
  for (int i = 0; i < 9; ++i) b.insert(std::vector<double>{double(i % 3), double(i / 3)});
  auto t = b.freeze();
  auto leaf = t.leaves().front();
  std::vector<double> far{9.5, 9.5};
  t.expand_leaf(leaf, far);
  for (auto id = leaf; id != kNoNode; id = t.node(id).parent) {
    EXPECT_TRUE(t.node(id).mbr.contains(far));
  }
  EXPECT_FALSE(t.containing_leaves(far).empty());
}
