#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ihcube/config.hpp"
#include "ihcube/partitioner.hpp"

namespace ihcube::bench {

/// Synthetic scatterplot-matrix data: columns d0..d{n-1} on [0, 100] plus a
/// nonnegative measure "value" on [0, 100].
struct SplomSpec {
  std::uint32_t dims = 5;
  std::uint64_t rows = 100000;
  /// Chart bins per dimension; also the scale count (made 2-3-5-smooth).
  std::uint32_t chart_bins = 10;
  std::uint32_t clusters = 4;
  /// Share of rows drawn from the Gaussian clusters; the rest is uniform.
  double cluster_fraction = 0.7;
  /// Cluster standard deviation range as a fraction of the domain.
  double sigma_min = 0.03, sigma_max = 0.12;
  /// Heavy-tailed 2D layout: log-normal first axis, narrow clusters on the
  /// second. Forces dims = 2.
  bool skewed = false;
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr double kSplomDomain = 100.0;

struct Cluster {
  double weight;
  std::vector<double> mean, sigma;
};

/// Cluster parameters drawn from the seed alone.
std::vector<Cluster> splom_clusters(const SplomSpec& spec);

Schema splom_schema(const SplomSpec& spec);
SchemaConfig splom_config(const SplomSpec& spec);

/// Rows regenerated from the seed on every scan, so nothing is held in
/// memory.
class SplomSource : public PointSource {
 public:
  explicit SplomSource(SplomSpec spec);
  void scan(const std::function<void(const DataPoint&)>& fn) const override;
  std::optional<std::uint64_t> size() const override { return spec_.rows; }
  const SplomSpec& spec() const { return spec_; }

 private:
  SplomSpec spec_;
  std::vector<Cluster> clusters_;
};

std::vector<DataPoint> generate_points(const SplomSpec& spec);

/// Header plus one line per row, values printed to round-trip exactly.
void write_splom_csv(const SplomSpec& spec, const std::string& path);

SplomSpec parse_splom_spec(const Json& j, const std::string& path = "data");
Json splom_spec_to_json(const SplomSpec& spec);

}  // namespace ihcube::bench
