#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ihcube/partitioner.hpp"
#include "ihcube/query.hpp"

namespace ihcube {

/// Exact answer by a linear scan over raw rows, with the same cell rule as
/// execute(): [e_t, e_t+1), closed on the right at the domain maximum.
/// Median is the middle value (mean of the two middle values for even n).
QueryResult scan_oracle(const Schema& schema, const PointSource& source,
                        const QuerySpec& spec);
QueryResult scan_oracle(const Schema& schema, std::span<const DataPoint> points,
                        const QuerySpec& spec, bool parallel = false);

/// Average relative error: mean over cells of |v - x| / max(v, x), with 0
/// when both are 0. A cell empty on one side only contributes 1 unless the
/// other side is exactly 0.
double average_relative_error(std::span<const std::optional<double>> values,
                              std::span<const std::optional<double>> exact);

}  // namespace ihcube
