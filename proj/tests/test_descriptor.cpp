#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ihcube/descriptor.hpp"
#include "ihcube/error.hpp"

using namespace ihcube;

namespace {

FeatureDescriptor agg(std::int64_t count, double sum) {
  return FeatureDescriptor(DescriptorLayout::aggregate(1), {count}, {sum});
}

}  // namespace

TEST(Descriptor, AddZeroIsIdentity) {
  auto a = agg(1, 2.0);
  EXPECT_EQ(descriptor_add(a, agg(0, 0.0)), a);
}

TEST(Descriptor, AddIsElementwise) {
  auto r = descriptor_add(agg(1, 2.0), agg(3, 4.0));
  EXPECT_EQ(r.count(), 4);
  EXPECT_EQ(r.sums()[0], 6.0);
}

TEST(Descriptor, AddThenSubtractRestores) {
  auto a = agg(7, 11.0);
  auto b = agg(1000000007, 3.0);
  EXPECT_EQ((a + b) - b, a);
}

TEST(Descriptor, LayoutMismatchThrows) {
  FeatureDescriptor h(DescriptorLayout::histogram(4, 0, 1));
  EXPECT_THROW(agg(1, 1.0) + h, SchemaError);
  FeatureDescriptor two(DescriptorLayout::aggregate(2));
  EXPECT_THROW(agg(1, 1.0) - two, SchemaError);
}

TEST(Descriptor, CommutativeAndAssociative) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> n(0, 1 << 20);
  for (int i = 0; i < 100; ++i) {
    auto a = agg(n(rng), static_cast<double>(n(rng)));
    auto b = agg(n(rng), static_cast<double>(n(rng)));
    auto c = agg(n(rng), static_cast<double>(n(rng)));
    EXPECT_EQ(a + b, b + a);
    EXPECT_EQ((a + b) + c, a + (b + c));
  }
}

TEST(Measure, MeanIsSumOverCount) {
  EXPECT_DOUBLE_EQ(*estimate_measure(agg(10, 50.0), Measure::mean(0)), 5.0);
}

TEST(Measure, CountAndSumSlots) {
  auto d = agg(10, 50.0);
  EXPECT_EQ(*estimate_measure(d, Measure::count()), 10.0);
  EXPECT_EQ(*estimate_measure(d, Measure::sum(0)), 50.0);
}

TEST(Measure, EmptyMeanAndMedianAreEmptyMarker) {
  EXPECT_FALSE(estimate_measure(agg(0, 0.0), Measure::mean(0)).has_value());
  FeatureDescriptor h(DescriptorLayout::histogram(2, 0, 1));
  LocalBinning b{0.0, 2.0, 2};
  EXPECT_FALSE(estimate_measure(h, Measure::median(0), &b).has_value());
}

TEST(Measure, SymmetricHistogramMedian) {
  FeatureDescriptor h(DescriptorLayout::histogram(2, 0, 1), {8, 4, 4}, {8.0});
  LocalBinning b{0.0, 2.0, 2};
  EXPECT_DOUBLE_EQ(*estimate_measure(h, Measure::median(0), &b), 1.0);
}

TEST(Measure, MedianWithinOneBinOfSortedMedian) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 17.0);
  std::vector<double> xs(1000);
  for (auto& x : xs) x = u(rng);
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  LocalBinning b{*mn, *mx, 32};
  auto layout = DescriptorLayout::histogram(32, 0, 1);
  FeatureDescriptor d(layout);
  for (double x : xs) d.add_point(std::span<const double>(&x, 1), b.bin_of(x));
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double exact = 0.5 * (sorted[499] + sorted[500]);
  double width = (b.hi - b.lo) / 32.0;
  EXPECT_LE(std::abs(*estimate_measure(d, Measure::median(0), &b) - exact),
            width);
}

TEST(Measure, MedianMergesComponentsWithDifferentEdges) {
  // Two disjoint uniform blocks of equal mass: the median is the gap start.
  std::vector<HistogramComponent> parts{
      {LocalBinning{0.0, 1.0, 2}, {5.0, 5.0}},
      {LocalBinning{3.0, 5.0, 1}, {10.0}},
  };
  EXPECT_DOUBLE_EQ(*estimate_median(parts), 1.0);
  parts[1].mass = {30.0};
  // 10 mass below 3, target 20 -> 10 more into [3,5] of density 15.
  EXPECT_DOUBLE_EQ(*estimate_median(parts), 3.0 + 10.0 / 15.0);
}

TEST(Measure, MedianNeedsHistogramOverTarget) {
  EXPECT_THROW(check_measure_supported(DescriptorLayout::aggregate(2),
                                       Measure::median(0)),
               UnsupportedError);
  EXPECT_THROW(check_measure_supported(DescriptorLayout::histogram(8, 1, 2),
                                       Measure::median(0)),
               UnsupportedError);
  EXPECT_NO_THROW(check_measure_supported(DescriptorLayout::histogram(8, 1, 2),
                                          Measure::median(1)));
}

TEST(Measure, ParseRoundTrip) {
  for (auto k : {MeasureKind::count, MeasureKind::sum, MeasureKind::mean,
                 MeasureKind::median}) {
    EXPECT_EQ(parse_measure_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_measure_kind("variance").has_value());
}
