#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihcube/binning.hpp"

namespace ihcube {

enum class DescriptorKind { aggregate, histogram };

/// Slot layout shared by every descriptor of an index.
///
/// Integer slots: slot 0 holds the point count; histogram layouts append
/// `histogram_bins` bin counts over one measure. Real slots: one running sum
/// per measure dimension.
struct DescriptorLayout {
  DescriptorKind kind = DescriptorKind::aggregate;
  std::uint32_t histogram_bins = 0;
  std::uint32_t histogram_measure = 0;
  std::uint32_t sum_slots = 0;

  static DescriptorLayout aggregate(std::uint32_t measures) {
    return {DescriptorKind::aggregate, 0, 0, measures};
  }
  static DescriptorLayout histogram(std::uint32_t bins, std::uint32_t measure,
                                    std::uint32_t measures) {
    return {DescriptorKind::histogram, bins, measure, measures};
  }

  std::size_t count_slots() const { return 1 + histogram_bins; }
  friend bool operator==(const DescriptorLayout&,
                         const DescriptorLayout&) = default;
};

/// Summary of a set of points: the unit of all prefix-sum arithmetic.
/// Addition and subtraction are slotwise; the zero descriptor is the
/// identity. Counts are exact 64-bit integers.
class FeatureDescriptor {
 public:
  FeatureDescriptor() = default;
  explicit FeatureDescriptor(const DescriptorLayout& layout);
  FeatureDescriptor(const DescriptorLayout& layout,
                    std::vector<std::int64_t> counts, std::vector<double> sums);

  const DescriptorLayout& layout() const { return layout_; }
  DescriptorKind kind() const { return layout_.kind; }

  std::int64_t count() const { return counts_.empty() ? 0 : counts_[0]; }
  std::span<const std::int64_t> counts() const { return counts_; }
  std::span<std::int64_t> counts() { return counts_; }
  std::span<const double> sums() const { return sums_; }
  std::span<double> sums() { return sums_; }
  std::span<const std::int64_t> histogram() const {
    return std::span<const std::int64_t>(counts_).subspan(1);
  }

  bool is_zero() const;

  /// Adds one point. `hist_bin` is the local histogram bin of the binned
  /// measure (ignored by aggregate layouts).
  void add_point(std::span<const double> measures, std::size_t hist_bin);

  FeatureDescriptor& operator+=(const FeatureDescriptor& o);
  FeatureDescriptor& operator-=(const FeatureDescriptor& o);
  friend FeatureDescriptor operator+(FeatureDescriptor a,
                                     const FeatureDescriptor& b) {
    return a += b;
  }
  friend FeatureDescriptor operator-(FeatureDescriptor a,
                                     const FeatureDescriptor& b) {
    return a -= b;
  }
  friend bool operator==(const FeatureDescriptor&,
                         const FeatureDescriptor&) = default;

 private:
  void check_compatible(const FeatureDescriptor& o) const;

  DescriptorLayout layout_;
  std::vector<std::int64_t> counts_;
  std::vector<double> sums_;
};

FeatureDescriptor descriptor_add(const FeatureDescriptor& a,
                                 const FeatureDescriptor& b);

enum class MeasureKind { count, sum, mean, median };

struct Measure {
  MeasureKind kind = MeasureKind::count;
  /// Position among the schema's measure dimensions (unused for count).
  std::uint32_t target = 0;

  static Measure count() { return {MeasureKind::count, 0}; }
  static Measure sum(std::uint32_t m) { return {MeasureKind::sum, m}; }
  static Measure mean(std::uint32_t m) { return {MeasureKind::mean, m}; }
  static Measure median(std::uint32_t m) { return {MeasureKind::median, m}; }

  /// Count and sums of nonnegative values: bounds from inner/outer snapping
  /// bracket the exact answer.
  bool is_distributive() const {
    return kind == MeasureKind::count || kind == MeasureKind::sum;
  }
};

std::string to_string(MeasureKind k);
std::optional<MeasureKind> parse_measure_kind(const std::string& s);

/// Throws UnsupportedError when the layout cannot answer `m`.
void check_measure_supported(const DescriptorLayout& layout, const Measure& m);

/// A histogram contribution with its own local edges; bin masses may be
/// fractional (uniformly apportioned contributions).
struct HistogramComponent {
  LocalBinning binning;
  std::vector<double> mass;
};

/// Value at cumulative 50% of the combined mass, linearly interpolated
/// inside the containing bin. nullopt when the total mass is zero.
std::optional<double> estimate_median(std::span<const HistogramComponent> parts);

/// count -> slot 0, sum -> sum slot, mean -> sum / count, median -> from the
/// histogram over `binning`. Empty selections give nullopt for mean/median.
std::optional<double> estimate_measure(const FeatureDescriptor& d,
                                       const Measure& m,
                                       const LocalBinning* binning = nullptr);

}  // namespace ihcube
