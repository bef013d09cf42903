#include "ihcube/bench/splom.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include "ihcube/error.hpp"

namespace ihcube::bench {
namespace {

class RowGenerator {
 public:
  RowGenerator(const SplomSpec& spec, const std::vector<Cluster>& clusters)
      : spec_(spec), clusters_(clusters), rng_(spec.seed) {
    std::vector<double> w;
    for (const auto& c : clusters) w.push_back(c.weight);
    pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }

  void next(DataPoint& p) {
    const std::uint32_t d = spec_.skewed ? 2 : spec_.dims;
    p.coordinates.resize(d);
    p.measures.resize(1);
    const bool clustered = unit_(rng_) < spec_.cluster_fraction;
    const Cluster& c = clusters_[pick_(rng_)];
    for (std::uint32_t i = 0; i < d; ++i) {
      if (spec_.skewed && i == 0) {
        p.coordinates[i] = draw_inside([&] { return std::exp(2.3 + 0.9 * normal_(rng_)); });
      } else if (clustered) {
        p.coordinates[i] = draw_inside([&] { return c.mean[i] + c.sigma[i] * normal_(rng_); });
      } else {
        p.coordinates[i] = kSplomDomain * unit_(rng_);
      }
    }
    const double u = unit_(rng_);
    p.measures[0] = kSplomDomain * u * u;
  }

 private:
  template <class F>
  double draw_inside(F draw) {
    for (int t = 0; t < 64; ++t) {
      double x = draw();
      if (x >= 0.0 && x <= kSplomDomain) return x;
    }
    return std::clamp(draw(), 0.0, kSplomDomain);
  }

  const SplomSpec& spec_;
  const std::vector<Cluster>& clusters_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::discrete_distribution<std::size_t> pick_;
};

}  // namespace

void SplomSpec::validate() const {
  if (dims < 1 || dims > 5) throw ValidationError("data.dims", "must be in [1, 5]");
  if (skewed && dims != 2) throw ValidationError("data.dims", "the skewed layout is 2D");
  if (chart_bins < 1) throw ValidationError("data.chart_bins", "must be >= 1");
  if (clusters < 1) throw ValidationError("data.clusters", "must be >= 1");
  if (!(cluster_fraction >= 0.0 && cluster_fraction <= 1.0)) {
    throw ValidationError("data.cluster_fraction", "must be in [0, 1]");
  }
  if (!(sigma_min > 0.0 && sigma_max >= sigma_min)) {
    throw ValidationError("data.sigma_min", "need 0 < sigma_min <= sigma_max");
  }
}

std::vector<Cluster> splom_clusters(const SplomSpec& spec) {
  // Separate stream from the rows so changing the row count keeps clusters.
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::uint32_t d = spec.skewed ? 2 : spec.dims;
  std::vector<Cluster> out(spec.clusters);
  for (auto& c : out) {
    c.weight = 0.5 + u(rng);
    for (std::uint32_t i = 0; i < d; ++i) {
      c.mean.push_back(15.0 + 70.0 * u(rng));
      const double s = spec.skewed ? 0.01 + 0.02 * u(rng)
                                   : spec.sigma_min + (spec.sigma_max - spec.sigma_min) * u(rng);
      c.sigma.push_back(s * kSplomDomain);
    }
  }
  return out;
}

SchemaConfig splom_config(const SplomSpec& spec) {
  spec.validate();
  SchemaConfig c;
  const auto scales = static_cast<std::uint32_t>(next_smooth_235(spec.chart_bins));
  const std::uint32_t d = spec.skewed ? 2 : spec.dims;
  for (std::uint32_t i = 0; i < d; ++i) {
    DimensionConfig dim;
    dim.name = "d" + std::to_string(i);
    dim.domain_min = 0.0;
    dim.domain_max = kSplomDomain;
    dim.scale_count = scales;
    c.dimensions.push_back(dim);
  }
  DimensionConfig v;
  v.name = "value";
  v.role = DimensionRole::measure;
  v.domain_min = 0.0;
  v.domain_max = kSplomDomain;
  v.scale_count = 1;
  c.dimensions.push_back(v);
  return c;
}

Schema splom_schema(const SplomSpec& spec) { return splom_config(spec).schema(); }

SplomSource::SplomSource(SplomSpec spec)
    : spec_(spec), clusters_(splom_clusters(spec)) {
  spec_.validate();
}

void SplomSource::scan(const std::function<void(const DataPoint&)>& fn) const {
  RowGenerator gen(spec_, clusters_);
  DataPoint p;
  for (std::uint64_t r = 0; r < spec_.rows; ++r) {
    gen.next(p);
    fn(p);
  }
}

std::vector<DataPoint> generate_points(const SplomSpec& spec) {
  std::vector<DataPoint> out;
  out.reserve(spec.rows);
  SplomSource(spec).scan([&](const DataPoint& p) { out.push_back(p); });
  return out;
}

void write_splom_csv(const SplomSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write '" + path + "'");
  const auto schema = splom_schema(spec);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    out << (i ? "," : "") << schema.dimensions()[i].name;
  }
  out << '\n';
  std::string line;
  char buf[32];
  auto put = [&](double x) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    line.append(buf, end);
  };
  SplomSource(spec).scan([&](const DataPoint& p) {
    line.clear();
    for (double x : p.coordinates) {
      put(x);
      line += ',';
    }
    put(p.measures[0]);
    line += '\n';
    out << line;
  });
  if (!out) throw IngestError("write to '" + path + "' failed");
}

SplomSpec parse_splom_spec(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  reject_unknown(j, path, {"dims", "rows", "chart_bins", "clusters", "cluster_fraction",
                           "sigma_min", "sigma_max", "skewed", "seed"});
  SplomSpec s;
  auto field = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(dst);
    } catch (const Json::exception&) {
      throw ValidationError(path + "." + key, "wrong type");
    }
  };
  field("dims", s.dims);
  field("rows", s.rows);
  field("chart_bins", s.chart_bins);
  field("clusters", s.clusters);
  field("cluster_fraction", s.cluster_fraction);
  field("sigma_min", s.sigma_min);
  field("sigma_max", s.sigma_max);
  field("skewed", s.skewed);
  field("seed", s.seed);
  if (s.skewed && !j.contains("dims")) s.dims = 2;
  s.validate();
  return s;
}

Json splom_spec_to_json(const SplomSpec& s) {
  return Json{{"dims", s.dims},           {"rows", s.rows},
              {"chart_bins", s.chart_bins}, {"clusters", s.clusters},
              {"cluster_fraction", s.cluster_fraction},
              {"sigma_min", s.sigma_min}, {"sigma_max", s.sigma_max},
              {"skewed", s.skewed},       {"seed", s.seed}};
}

}  // namespace ihcube::bench
