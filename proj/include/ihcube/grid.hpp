#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihcube/schema.hpp"

namespace ihcube {

enum class BinStrategy { equi_width, equi_data, log, explicit_edges };

std::string to_string(BinStrategy s);
std::optional<BinStrategy> parse_bin_strategy(const std::string& s);

/// n + 1 uniform edges over [lo, hi] with exact endpoints.
std::vector<double> equi_width_edges(double lo, double hi, std::size_t bins);

/// Geometric edges over [lo, hi]; requires 0 < lo < hi.
std::vector<double> log_edges(double lo, double hi, std::size_t bins);

/// Edges at the k/bins quantiles of a mass histogram over `fine_edges`,
/// interpolated linearly inside the fine bin. Falls back to uniform edges
/// when the mass is zero. Duplicate edges are dropped, so fewer bins may
/// come back.
std::vector<double> quantile_edges(std::span<const double> fine_edges,
                                   std::span<const double> mass,
                                   std::size_t bins);

/// Throws ValidationError at `field` unless there are at least two finite,
/// strictly increasing edges.
void check_edges(std::span<const double> edges, const std::string& field);

/// Moves every edge to the nearest scale boundary of `dim` and merges bins
/// that collapse. A range narrower than one unit widens to the enclosing
/// boundaries.
std::vector<double> align_edges(const DimensionSpec& dim,
                                std::span<const double> edges);

/// Uniform grid of `bins` cells on the scale lattice: the cell width is the
/// 2-3-5-smooth number of scale units nearest to the requested width and
/// the first edge is a multiple of it, placed to keep the centre of
/// [lo, hi]. Width and bin count shrink when the domain is too small.
std::vector<double> aligned_uniform_edges(const DimensionSpec& dim, double lo,
                                          double hi, std::size_t bins);

}  // namespace ihcube
