#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ihcube/binning.hpp"
#include "ihcube/descriptor.hpp"
#include "ihcube/geometry.hpp"
#include "ihcube/schema.hpp"

namespace ihcube {

enum class Rounding { nearest, inner, outer };

/// A real coordinate expressed against one dimension's scale lattice.
/// `floor == ceil` exactly when the value sits on a scale boundary.
struct ScaleCoord {
  double pos = 0.0;
  std::int64_t floor = 0;
  std::int64_t ceil = 0;

  bool on_boundary() const { return floor == ceil; }
};

ScaleCoord to_scale(const DimensionSpec& dim, double x);

/// Limits on the cell grid of one subspace.
struct ResolutionPolicy {
  std::uint32_t max_cells_per_dim = 64;
  std::uint64_t max_cells_total = std::uint64_t{1} << 12;
  /// Categorical axes with at most this many labels keep one cell per label.
  std::uint32_t categorical_full_resolution = 100;
};

/// Cell edges (scale boundary indices) covering `bounds`. Cell widths are
/// 2-3-5-smooth multiples of a scale unit and edges sit on multiples of the
/// width, so grids drawn on the scale lattice coincide with cells often.
std::vector<std::vector<std::int64_t>> plan_cell_edges(
    std::span<const DimensionSpec> axes, const Rect& bounds,
    const ResolutionPolicy& policy);

/// Dense grid of descriptors, row-major over `shape`.
struct DescriptorGrid {
  DescriptorLayout layout;
  std::vector<std::size_t> shape;
  std::vector<std::int64_t> counts;  // cells x layout.count_slots()
  std::vector<double> sums;          // cells x layout.sum_slots

  std::size_t cells() const;
  FeatureDescriptor at(std::size_t flat) const;
  friend bool operator==(const DescriptorGrid&, const DescriptorGrid&) = default;
};

/// Whether each output cell edge landed exactly on a table cell boundary
/// (no rounding needed), per axis and per cell along that axis.
using CoincidenceFlags = std::vector<std::vector<char>>;

/// Summed-area table of feature descriptors over one subspace.
///
/// H(x_1..x_d) is the descriptor of every point whose cell index is < x_i on
/// each axis; prefix index 0 is the empty prefix. Before `finalize()` the
/// table holds raw per-cell descriptors and only `accumulate` is valid.
class IntegralHistogram {
 public:
  IntegralHistogram() = default;
  IntegralHistogram(std::vector<std::vector<std::int64_t>> edges,
                    DescriptorLayout layout, LocalBinning hist_binning = {});

  /// Builds and finalizes from an in-memory point set. Points must lie inside
  /// the cell edges (ConstructionError otherwise).
  static IntegralHistogram build(std::span<const DimensionSpec> axes,
                                 std::span<const DataPoint> points,
                                 const Rect& bounds,
                                 const ResolutionPolicy& policy,
                                 const DescriptorLayout& layout,
                                 bool parallel = true);

  void accumulate(std::span<const DimensionSpec> axes,
                  std::span<const double> coordinates,
                  std::span<const double> measures);
  /// Turns raw cell descriptors into cumulative ones.
  void finalize(bool parallel = true);
  bool finalized() const { return finalized_; }

  std::size_t dims() const { return edges_.size(); }
  const std::vector<std::vector<std::int64_t>>& edges() const { return edges_; }
  std::vector<std::size_t> cell_counts() const;
  std::size_t cells() const { return cells_; }
  const DescriptorLayout& layout() const { return layout_; }
  const LocalBinning& hist_binning() const { return hist_binning_; }
  /// Real-valued extent covered by the cells.
  Rect bounds(std::span<const DimensionSpec> axes) const;

  /// H at a prefix index (each component in [0, N_d]).
  FeatureDescriptor prefix(std::span<const std::size_t> index) const;
  FeatureDescriptor total() const;

  /// Descriptor of the rectangle after snapping its corners to cell
  /// boundaries. Equivalent to the signed corner sum of H; evaluated as
  /// successive differences along each axis so that it agrees bitwise with
  /// query_grid.
  FeatureDescriptor query_rect(std::span<const DimensionSpec> axes,
                               const Rect& rect, Rounding rounding) const;
  FeatureDescriptor query_rect(std::span<const ScaleCoord> lo,
                               std::span<const ScaleCoord> hi,
                               Rounding rounding) const;

  /// Batched query: `axis_edges[d]` holds n_d + 1 sorted edges per axis and
  /// the result has shape n_0 x ... x n_{k-1}. Fetches the lattice of snapped
  /// prefixes once and takes one adjacent difference per axis.
  void query_grid(std::span<const std::vector<ScaleCoord>> axis_edges,
                  Rounding rounding, DescriptorGrid& out,
                  CoincidenceFlags* coincidence = nullptr,
                  bool parallel = false) const;

  std::size_t storage_bytes() const;

  // Raw table access for serialization.
  const std::vector<std::int64_t>& raw_counts() const { return counts_; }
  const std::vector<double>& raw_sums() const { return sums_; }
  static IntegralHistogram from_raw(std::vector<std::vector<std::int64_t>> edges,
                                    DescriptorLayout layout,
                                    LocalBinning hist_binning,
                                    std::vector<std::int64_t> counts,
                                    std::vector<double> sums);

 private:
  // Snapped prefix index of one edge for the given side of a cell.
  std::size_t snap(std::size_t axis, const ScaleCoord& c, Rounding rounding,
                   bool lower_side) const;
  bool on_cell_edge(std::size_t axis, const ScaleCoord& c) const;
  std::size_t cell_of(std::size_t axis, std::int64_t unit) const;
  void gather(std::span<const std::vector<std::uint32_t>> points,
              std::span<std::int64_t> counts, std::span<double> sums,
              bool parallel) const;

  std::vector<std::vector<std::int64_t>> edges_;
  std::vector<std::size_t> strides_;  // cell strides per axis
  std::size_t cells_ = 0;
  DescriptorLayout layout_;
  LocalBinning hist_binning_;
  std::vector<std::int64_t> counts_;
  std::vector<double> sums_;
  bool finalized_ = false;
};

}  // namespace ihcube
