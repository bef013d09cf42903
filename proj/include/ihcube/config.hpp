#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihcube/partitioner.hpp"
#include "ihcube/schema.hpp"

namespace ihcube {

using Json = nlohmann::json;

/// One dimension as written in a config file; "auto" fields stay unset
/// until resolved against the data.
struct DimensionConfig {
  std::string name;
  DimensionKind kind = DimensionKind::numeric;
  DimensionRole role = DimensionRole::index;
  std::optional<double> domain_min, domain_max;  // unset: auto
  std::optional<std::uint32_t> scale_count;      // unset: auto
  /// Scale unit size used when scale_count is auto (e.g. 1 for seconds).
  std::optional<double> resolution;
  std::vector<std::string> labels;  // categorical; empty: auto

  bool needs_scan() const;
};

struct SchemaConfig {
  std::vector<DimensionConfig> dimensions;
  BuildConfig build;
  /// Histogram descriptor over this measure when set; aggregate otherwise.
  std::optional<std::string> histogram_measure;
  std::uint32_t histogram_bins = 16;

  bool needs_scan() const;
  /// Schema once every auto field is resolved (throws SchemaError otherwise).
  Schema schema() const;
  /// BuildConfig with the descriptor layout filled in for `schema`.
  BuildConfig build_config(const Schema& schema) const;
};

/// Auto scale count: 360 units over the domain unless a resolution is given.
inline constexpr std::uint32_t kDefaultAutoScales = 360;

SchemaConfig parse_config(const Json& j);
SchemaConfig load_config(const std::string& path);
Json config_to_json(const SchemaConfig& c);

Json schema_to_json(const Schema& s);
Schema schema_from_json(const Json& j);

std::string to_string(DimensionKind k);
std::string to_string(DimensionRole r);

/// Throws ValidationError naming `path + "." + key` for any key of `j` not
/// in `allowed`.
void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<const char*> allowed);

}  // namespace ihcube
