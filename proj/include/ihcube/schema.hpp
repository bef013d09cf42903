#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ihcube {

enum class DimensionKind { numeric, categorical };
enum class DimensionRole { index, measure, both };

/// True when n > 0 has no prime factors other than 2, 3 and 5.
bool is_smooth_235(std::uint64_t n);
/// The 2-3-5-smooth number closest to n (ties resolve upward), e.g. 3571 -> 3600.
std::uint64_t nearest_smooth_235(std::uint64_t n);
/// Smallest 2-3-5-smooth number >= n.
std::uint64_t next_smooth_235(std::uint64_t n);

/// One column of the dataset.
///
/// The domain [domain_min, domain_max] is divided into `scale_count` equal
/// scale units. Scale boundary k sits at `boundary(k)`; a value belongs to
/// scale unit k when boundary(k) <= x < boundary(k + 1), with the last unit
/// closed at domain_max. Every routine below is defined in terms of
/// `boundary()` so that integer scale arithmetic and real comparisons agree
/// exactly.
struct DimensionSpec {
  std::string name;
  DimensionKind kind = DimensionKind::numeric;
  DimensionRole role = DimensionRole::index;
  double domain_min = 0.0;
  double domain_max = 1.0;
  std::uint32_t scale_count = 1;
  std::vector<std::string> category_labels;

  static DimensionSpec numeric(std::string name, double lo, double hi,
                               std::uint32_t scales,
                               DimensionRole role = DimensionRole::index);
  /// Categories map to codes 0..n-1 on the domain [0, n]; one scale unit each.
  static DimensionSpec categorical(std::string name,
                                   std::vector<std::string> labels,
                                   DimensionRole role = DimensionRole::index);

  void validate() const;

  bool is_index() const { return role != DimensionRole::measure; }
  bool is_measure() const { return role != DimensionRole::index; }

  double width() const { return domain_max - domain_min; }
  double boundary(std::int64_t k) const;
  /// Largest k in [0, S] with boundary(k) <= x.
  std::int64_t floor_boundary(double x) const;
  /// Smallest k in [0, S] with boundary(k) >= x.
  std::int64_t ceil_boundary(double x) const;
  /// Scale unit of an in-domain value, in [0, S - 1].
  std::int64_t unit(double x) const;
  /// Continuous position in scale units; exactly k when x == boundary(k).
  double position(double x) const;
  /// Nearest scale boundary index.
  std::int64_t nearest_boundary(double x) const;
  bool contains(double x) const { return x >= domain_min && x <= domain_max; }

  /// Category code for a label, nullopt when unknown.
  std::optional<std::int64_t> category_code(const std::string& label) const;
};

/// Ordered columns plus the derived index/measure projections.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<DimensionSpec> dims);

  const std::vector<DimensionSpec>& dimensions() const { return dims_; }
  std::size_t size() const { return dims_.size(); }

  /// Column positions of indexed dimensions, in schema order.
  const std::vector<std::size_t>& index_columns() const { return index_cols_; }
  const std::vector<std::size_t>& measure_columns() const {
    return measure_cols_;
  }
  std::size_t index_count() const { return index_cols_.size(); }
  std::size_t measure_count() const { return measure_cols_.size(); }

  const DimensionSpec& index_dim(std::size_t i) const {
    return dims_[index_cols_[i]];
  }
  const DimensionSpec& measure_dim(std::size_t i) const {
    return dims_[measure_cols_[i]];
  }
  /// Copies of the indexed dimensions, in index order.
  std::vector<DimensionSpec> index_axes() const;

  /// Column position by name; throws SchemaError when missing.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
  /// Position among indexed dimensions; throws SchemaError when not indexed.
  std::size_t index_position(const std::string& name) const;
  std::optional<std::size_t> find_index_position(const std::string& name) const;
  std::optional<std::size_t> find_measure_position(const std::string& name) const;

  /// Length of the domain diagonal measured in scale units.
  double diagonal_in_scales() const;

 private:
  std::vector<DimensionSpec> dims_;
  std::vector<std::size_t> index_cols_;
  std::vector<std::size_t> measure_cols_;
};

/// A row reduced to the columns the index cares about.
struct DataPoint {
  std::vector<double> coordinates;  // one per indexed dimension
  std::vector<double> measures;     // one per measure dimension
};

}  // namespace ihcube
