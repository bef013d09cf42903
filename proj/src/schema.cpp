#include "ihcube/schema.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ihcube/error.hpp"

namespace ihcube {

bool is_smooth_235(std::uint64_t n) {
  if (n == 0) return false;
  for (std::uint64_t p : {2u, 3u, 5u}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

std::uint64_t next_smooth_235(std::uint64_t n) {
  if (n <= 1) return 1;
  while (!is_smooth_235(n)) ++n;
  return n;
}

std::uint64_t nearest_smooth_235(std::uint64_t n) {
  if (n <= 1) return 1;
  std::uint64_t up = next_smooth_235(n);
  std::uint64_t down = n;
  while (!is_smooth_235(down)) --down;
  return (up - n) <= (n - down) ? up : down;
}

DimensionSpec DimensionSpec::numeric(std::string name, double lo, double hi,
                                     std::uint32_t scales, DimensionRole role) {
  DimensionSpec d;
  d.name = std::move(name);
  d.kind = DimensionKind::numeric;
  d.role = role;
  d.domain_min = lo;
  d.domain_max = hi;
  d.scale_count = scales;
  return d;
}

DimensionSpec DimensionSpec::categorical(std::string name,
                                         std::vector<std::string> labels,
                                         DimensionRole role) {
  DimensionSpec d;
  d.name = std::move(name);
  d.kind = DimensionKind::categorical;
  d.role = role;
  d.domain_min = 0.0;
  d.domain_max = static_cast<double>(labels.size());
  d.scale_count = static_cast<std::uint32_t>(labels.size());
  d.category_labels = std::move(labels);
  return d;
}

void DimensionSpec::validate() const {
  if (name.empty()) throw SchemaError("dimension with empty name");
  if (!std::isfinite(domain_min) || !std::isfinite(domain_max) ||
      !(domain_min < domain_max)) {
    throw SchemaError("dimension '" + name + "': domain_min must be < domain_max");
  }
  if (scale_count == 0) {
    throw SchemaError("dimension '" + name + "': scale_count must be positive");
  }
  if (kind == DimensionKind::categorical) {
    if (category_labels.empty()) {
      throw SchemaError("dimension '" + name + "': categorical without labels");
    }
    if (scale_count != category_labels.size()) {
      throw SchemaError("dimension '" + name +
                        "': categorical scale_count must equal label count");
    }
    std::unordered_set<std::string> seen(category_labels.begin(),
                                         category_labels.end());
    if (seen.size() != category_labels.size()) {
      throw SchemaError("dimension '" + name + "': duplicate category label");
    }
  } else if (!is_smooth_235(scale_count)) {
    throw SchemaError("dimension '" + name + "': scale_count " +
                      std::to_string(scale_count) +
                      " is not 2-3-5-smooth (nearest is " +
                      std::to_string(nearest_smooth_235(scale_count)) + ")");
  }
}

double DimensionSpec::boundary(std::int64_t k) const {
  if (k <= 0) return domain_min;
  if (k >= static_cast<std::int64_t>(scale_count)) return domain_max;
  return domain_min + width() * static_cast<double>(k) /
                          static_cast<double>(scale_count);
}

std::int64_t DimensionSpec::floor_boundary(double x) const {
  const auto s = static_cast<std::int64_t>(scale_count);
  if (x <= domain_min) return 0;
  if (x >= domain_max) return s;
  auto k = static_cast<std::int64_t>(
      std::floor((x - domain_min) / width() * static_cast<double>(s)));
  k = std::clamp<std::int64_t>(k, 0, s);
  while (k < s && boundary(k + 1) <= x) ++k;
  while (k > 0 && boundary(k) > x) --k;
  return k;
}

std::int64_t DimensionSpec::ceil_boundary(double x) const {
  const auto s = static_cast<std::int64_t>(scale_count);
  if (x <= domain_min) return 0;
  if (x >= domain_max) return s;
  std::int64_t k = floor_boundary(x);
  if (boundary(k) < x) ++k;
  return k;
}

std::int64_t DimensionSpec::unit(double x) const {
  return std::min<std::int64_t>(floor_boundary(x),
                                static_cast<std::int64_t>(scale_count) - 1);
}

double DimensionSpec::position(double x) const {
  std::int64_t k = floor_boundary(x);
  if (boundary(k) == x) return static_cast<double>(k);
  double p = (x - domain_min) / width() * static_cast<double>(scale_count);
  if (x < domain_min || x > domain_max) return p;
  // Keep the position inside its unit so that it is monotone in x.
  return std::clamp(p, static_cast<double>(k), static_cast<double>(k + 1));
}

std::int64_t DimensionSpec::nearest_boundary(double x) const {
  std::int64_t lo = floor_boundary(x);
  std::int64_t hi = ceil_boundary(x);
  if (lo == hi) return lo;
  return (x - boundary(lo)) <= (boundary(hi) - x) ? lo : hi;
}

std::optional<std::int64_t> DimensionSpec::category_code(
    const std::string& label) const {
  auto it = std::find(category_labels.begin(), category_labels.end(), label);
  if (it == category_labels.end()) return std::nullopt;
  return static_cast<std::int64_t>(it - category_labels.begin());
}

Schema::Schema(std::vector<DimensionSpec> dims) : dims_(std::move(dims)) {
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    dims_[i].validate();
    if (!names.insert(dims_[i].name).second) {
      throw SchemaError("duplicate dimension name '" + dims_[i].name + "'");
    }
    if (dims_[i].is_index()) index_cols_.push_back(i);
    if (dims_[i].is_measure()) measure_cols_.push_back(i);
  }
  if (index_cols_.empty()) throw SchemaError("schema has no index dimension");
}

std::optional<std::size_t> Schema::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::column(const std::string& name) const {
  auto c = find_column(name);
  if (!c) throw SchemaError("unknown dimension '" + name + "'");
  return *c;
}

std::optional<std::size_t> Schema::find_index_position(
    const std::string& name) const {
  for (std::size_t i = 0; i < index_cols_.size(); ++i) {
    if (dims_[index_cols_[i]].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::index_position(const std::string& name) const {
  auto p = find_index_position(name);
  if (!p) throw SchemaError("dimension '" + name + "' is not indexed");
  return *p;
}

std::optional<std::size_t> Schema::find_measure_position(
    const std::string& name) const {
  for (std::size_t i = 0; i < measure_cols_.size(); ++i) {
    if (dims_[measure_cols_[i]].name == name) return i;
  }
  return std::nullopt;
}

std::vector<DimensionSpec> Schema::index_axes() const {
  std::vector<DimensionSpec> axes;
  axes.reserve(index_cols_.size());
  for (auto c : index_cols_) axes.push_back(dims_[c]);
  return axes;
}

double Schema::diagonal_in_scales() const {
  double s = 0.0;
  for (auto c : index_cols_) {
    double n = dims_[c].scale_count;
    s += n * n;
  }
  return std::sqrt(s);
}

}  // namespace ihcube
