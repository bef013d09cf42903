#include <gtest/gtest.h>

#include <random>

#include "ihcube/error.hpp"
#include "ihcube/integral_histogram.hpp"

using namespace ihcube;

namespace {

std::vector<DimensionSpec> axes2(std::uint32_t s0 = 8, std::uint32_t s1 = 8) {
  return {DimensionSpec::numeric("x", 0.0, 8.0, s0),
          DimensionSpec::numeric("y", -1.0, 3.0, s1)};
}

Rect full(std::span<const DimensionSpec> axes) {
  Rect r(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    r[d] = {axes[d].domain_min, axes[d].domain_max};
  }
  return r;
}

std::vector<DataPoint> random_points(std::span<const DimensionSpec> axes,
                                     std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DataPoint> pts(n);
  for (auto& p : pts) {
    for (const auto& a : axes) {
      std::uniform_real_distribution<double> u(a.domain_min, a.domain_max);
      // Some mass exactly on scale boundaries and on the closed upper edge.
      double x = (rng() % 5 == 0) ? a.boundary(rng() % (a.scale_count + 1)) : u(rng);
      p.coordinates.push_back(x);
    }
    p.measures = {std::uniform_real_distribution<double>(0.0, 10.0)(rng)};
  }
  return pts;
}

// Half-open membership, closed at the domain maximum.
bool in_rect(std::span<const DimensionSpec> axes, const Rect& r,
             std::span<const double> p) {
  for (std::size_t d = 0; d < axes.size(); ++d) {
    bool closed = r[d].hi == axes[d].domain_max;
    if (p[d] < r[d].lo) return false;
    if (closed ? p[d] > r[d].hi : p[d] >= r[d].hi) return false;
  }
  return true;
}

std::int64_t scan_count(std::span<const DimensionSpec> axes,
                        std::span<const DataPoint> pts, const Rect& r) {
  std::int64_t n = 0;
  for (const auto& p : pts) n += in_rect(axes, r, p.coordinates);
  return n;
}

const auto kHist = DescriptorLayout::histogram(4, 0, 1);

}  // namespace

TEST(IntegralHistogram, EmptyInputGivesZeroTable) {
  auto axes = axes2();
  auto ih = IntegralHistogram::build(axes, {}, full(axes), {}, kHist);
  for (auto c : ih.raw_counts()) EXPECT_EQ(c, 0);
  EXPECT_TRUE(ih.total().is_zero());
}

TEST(IntegralHistogram, SinglePointIndicator) {
  auto axes = axes2();
  std::vector<DataPoint> pts{{{2.5, 0.2}, {1.0}}};
  auto ih = IntegralHistogram::build(axes, pts, full(axes), {}, kHist);
  // Cell (2, 2) on the 8 x 8 unit grid.
  for (std::size_t i = 0; i <= 8; ++i) {
    for (std::size_t j = 0; j <= 8; ++j) {
      std::size_t idx[] = {i, j};
      EXPECT_EQ(ih.prefix(idx).count(), (i > 2 && j > 2) ? 1 : 0);
    }
  }
}

TEST(IntegralHistogram, TotalCountConserved) {
  auto axes = axes2();
  auto pts = random_points(axes, 1000, 1);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), {}, kHist);
  EXPECT_EQ(ih.cell_counts(), (std::vector<std::size_t>{8, 8}));
  EXPECT_EQ(ih.total().count(), 1000);
  auto total = ih.total();
  std::int64_t bins = 0;
  for (auto b : total.histogram()) bins += b;
  EXPECT_EQ(bins, 1000);
}

TEST(IntegralHistogram, PointOutsideBoundsThrows) {
  auto axes = axes2();
  Rect half = full(axes);
  half[0].hi = 4.0;
  std::vector<DataPoint> pts{{{5.0, 0.0}, {1.0}}};
  EXPECT_THROW(IntegralHistogram::build(axes, pts, half, {}, kHist),
               ConstructionError);
}

TEST(IntegralHistogram, FullRectCollapsesToTotal) {
  auto axes = axes2();
  auto pts = random_points(axes, 500, 2);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), {}, kHist);
  for (auto mode : {Rounding::nearest, Rounding::inner, Rounding::outer}) {
    EXPECT_EQ(ih.query_rect(axes, full(axes), mode), ih.total());
  }
}

TEST(IntegralHistogram, AlignedRectMatchesScan) {
  auto axes = axes2(360, 180);
  ResolutionPolicy policy;
  policy.max_cells_per_dim = 24;
  auto pts = random_points(axes, 3000, 3);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), policy, kHist);
  std::mt19937_64 rng(4);
  for (int q = 0; q < 300; ++q) {
    Rect r(2);
    for (std::size_t d = 0; d < 2; ++d) {
      const auto& e = ih.edges()[d];
      auto a = rng() % e.size(), b = rng() % e.size();
      if (a > b) std::swap(a, b);
      r[d] = {axes[d].boundary(e[a]), axes[d].boundary(e[b])};
    }
    EXPECT_EQ(ih.query_rect(axes, r, Rounding::nearest).count(),
              scan_count(axes, pts, r));
  }
}

TEST(IntegralHistogram, InnerNearestOuterBracketScan) {
  auto axes = axes2(360, 180);
  ResolutionPolicy policy;
  policy.max_cells_per_dim = 16;
  auto pts = random_points(axes, 3000, 5);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), policy, kHist);
  std::mt19937_64 rng(6);
  for (int q = 0; q < 300; ++q) {
    Rect r(2);
    for (std::size_t d = 0; d < 2; ++d) {
      std::uniform_real_distribution<double> u(axes[d].domain_min,
                                               axes[d].domain_max);
      double a = u(rng), b = u(rng);
      r[d] = {std::min(a, b), std::max(a, b)};
    }
    auto inner = ih.query_rect(axes, r, Rounding::inner).count();
    auto nearest = ih.query_rect(axes, r, Rounding::nearest).count();
    auto outer = ih.query_rect(axes, r, Rounding::outer).count();
    auto exact = scan_count(axes, pts, r);
    EXPECT_LE(inner, nearest);
    EXPECT_LE(nearest, outer);
    EXPECT_LE(inner, exact);
    EXPECT_LE(exact, outer);
  }
}

TEST(IntegralHistogram, GridEqualsPerCellRectBitwise) {
  std::vector<DimensionSpec> axes{DimensionSpec::numeric("x", 0, 1, 360),
                                  DimensionSpec::numeric("y", 0, 1, 360),
                                  DimensionSpec::numeric("z", 0, 1, 60)};
  ResolutionPolicy policy;
  policy.max_cells_per_dim = 20;
  auto pts = random_points(axes, 4000, 7);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), policy, kHist);
  std::mt19937_64 rng(8);
  for (int g = 0; g < 30; ++g) {
    std::vector<std::vector<ScaleCoord>> edges(3);
    for (std::size_t d = 0; d < 3; ++d) {
      std::size_t n = 1 + rng() % (d == 2 ? 3 : 10);
      std::vector<double> xs;
      std::uniform_real_distribution<double> u(-0.1, 1.1);
      for (std::size_t i = 0; i <= n; ++i) xs.push_back(u(rng));
      std::sort(xs.begin(), xs.end());
      for (double x : xs) edges[d].push_back(to_scale(axes[d], x));
    }
    for (auto mode : {Rounding::nearest, Rounding::inner, Rounding::outer}) {
      DescriptorGrid grid, grid_par;
      ih.query_grid(edges, mode, grid);
      ih.query_grid(edges, mode, grid_par, nullptr, true);
      EXPECT_EQ(grid, grid_par);
      std::size_t flat = 0;
      for (std::size_t i = 0; i + 1 < edges[0].size(); ++i) {
        for (std::size_t j = 0; j + 1 < edges[1].size(); ++j) {
          for (std::size_t k = 0; k + 1 < edges[2].size(); ++k, ++flat) {
            ScaleCoord lo[] = {edges[0][i], edges[1][j], edges[2][k]};
            ScaleCoord hi[] = {edges[0][i + 1], edges[1][j + 1], edges[2][k + 1]};
            EXPECT_EQ(grid.at(flat), ih.query_rect(lo, hi, mode));
          }
        }
      }
    }
  }
}

TEST(IntegralHistogram, DisjointCoverSumsToTotal) {
  auto axes = axes2(360, 360);
  auto pts = random_points(axes, 2000, 9);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), {}, kHist);
  std::mt19937_64 rng(10);
  std::vector<std::vector<ScaleCoord>> edges(2);
  for (std::size_t d = 0; d < 2; ++d) {
    std::vector<double> xs{axes[d].domain_min, axes[d].domain_max};
    std::uniform_real_distribution<double> u(axes[d].domain_min,
                                             axes[d].domain_max);
    for (int i = 0; i < 13; ++i) xs.push_back(u(rng));
    std::sort(xs.begin(), xs.end());
    for (double x : xs) edges[d].push_back(to_scale(axes[d], x));
  }
  DescriptorGrid grid;
  ih.query_grid(edges, Rounding::nearest, grid);
  FeatureDescriptor sum(kHist);
  for (std::size_t c = 0; c < grid.cells(); ++c) sum += grid.at(c);
  EXPECT_EQ(sum, ih.total());
}

TEST(IntegralHistogram, AdditivityOfAdjacentRects) {
  auto axes = axes2();
  auto pts = random_points(axes, 800, 11);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), {}, kHist);
  Rect a(std::vector<Interval>{{1, 3}, {-1, 2}});
  Rect b(std::vector<Interval>{{3, 7}, {-1, 2}});
  Rect u(std::vector<Interval>{{1, 7}, {-1, 2}});
  auto qa = ih.query_rect(axes, a, Rounding::nearest);
  auto qb = ih.query_rect(axes, b, Rounding::nearest);
  EXPECT_EQ((qa + qb).counts()[0], ih.query_rect(axes, u, Rounding::nearest).count());
}

TEST(IntegralHistogram, PrefixCountsMonotone) {
  auto axes = axes2();
  auto pts = random_points(axes, 600, 12);
  auto ih = IntegralHistogram::build(axes, pts, full(axes), {}, kHist);
  for (std::size_t i = 0; i <= 8; ++i) {
    for (std::size_t j = 1; j <= 8; ++j) {
      std::size_t a[] = {i, j - 1}, b[] = {i, j}, c[] = {j - 1, i}, e[] = {j, i};
      EXPECT_LE(ih.prefix(a).count(), ih.prefix(b).count());
      EXPECT_LE(ih.prefix(c).count(), ih.prefix(e).count());
    }
  }
}

TEST(IntegralHistogram, SerialAndParallelFinalizeAgree) {
  auto axes = axes2(360, 360);
  auto pts = random_points(axes, 2000, 13);
  auto a = IntegralHistogram::build(axes, pts, full(axes), {}, kHist, false);
  auto b = IntegralHistogram::build(axes, pts, full(axes), {}, kHist, true);
  EXPECT_EQ(a.raw_counts(), b.raw_counts());
  EXPECT_EQ(a.raw_sums(), b.raw_sums());
}

TEST(IntegralHistogram, CoincidenceFlags) {
  auto axes = axes2();
  auto ih = IntegralHistogram::build(axes, {}, full(axes), {}, kHist);
  std::vector<std::vector<ScaleCoord>> edges{
      {to_scale(axes[0], 1.0), to_scale(axes[0], 2.0), to_scale(axes[0], 2.5)},
      {to_scale(axes[1], -1.0), to_scale(axes[1], 3.0)}};
  DescriptorGrid grid;
  CoincidenceFlags flags;
  ih.query_grid(edges, Rounding::nearest, grid, &flags);
  EXPECT_EQ(flags[0], (std::vector<char>{1, 0}));
  EXPECT_EQ(flags[1], (std::vector<char>{1}));
}

TEST(CellPlan, SmoothWidthsWithinBudget) {
  std::vector<DimensionSpec> axes{DimensionSpec::numeric("x", 0, 1, 3600),
                                  DimensionSpec::numeric("y", 0, 1, 360)};
  Rect b(std::vector<Interval>{{0.1234, 0.9}, {0.0, 0.05}});
  ResolutionPolicy policy;
  auto edges = plan_cell_edges(axes, b, policy);
  for (std::size_t d = 0; d < 2; ++d) {
    const auto& e = edges[d];
    EXPECT_LE(e.size() - 1, policy.max_cells_per_dim);
    auto w = e[1] - e[0];
    EXPECT_TRUE(is_smooth_235(static_cast<std::uint64_t>(w)));
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      EXPECT_EQ(e[i] % w, 0);
      EXPECT_LT(e[i], e[i + 1]);
    }
    EXPECT_LE(axes[d].boundary(e.front()), b[d].lo);
    EXPECT_GT(axes[d].boundary(e.back()), b[d].hi);
  }
}

TEST(CellPlan, TotalBudgetAndCategoricalResolution) {
  std::vector<DimensionSpec> axes{
      DimensionSpec::numeric("a", 0, 1, 1000), DimensionSpec::numeric("b", 0, 1, 1000),
      DimensionSpec::numeric("c", 0, 1, 1000), DimensionSpec::numeric("d", 0, 1, 1000),
      DimensionSpec::categorical("w", {"a", "b", "c", "d", "e", "f", "g"})};
  Rect b(5);
  for (std::size_t d = 0; d < 5; ++d) b[d] = {axes[d].domain_min, axes[d].domain_max};
  ResolutionPolicy policy;
  auto edges = plan_cell_edges(axes, b, policy);
  std::uint64_t total = 1;
  for (const auto& e : edges) total *= e.size() - 1;
  EXPECT_LE(total, policy.max_cells_total);
  EXPECT_EQ(edges[4].size(), 8u);
}
