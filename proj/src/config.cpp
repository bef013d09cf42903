#include "ihcube/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ihcube/error.hpp"

namespace ihcube {

namespace {

template <class T>
T get(const Json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(path, "wrong type");
  }
}

bool is_auto(const Json& j) { return j.is_string() && j.get<std::string>() == "auto"; }

DimensionKind parse_kind(const Json& j, const std::string& path) {
  auto s = get<std::string>(j, path);
  if (s == "numeric") return DimensionKind::numeric;
  if (s == "categorical") return DimensionKind::categorical;
  throw ValidationError(path, "expected \"numeric\" or \"categorical\"");
}

DimensionRole parse_role(const Json& j, const std::string& path) {
  auto s = get<std::string>(j, path);
  if (s == "index") return DimensionRole::index;
  if (s == "measure") return DimensionRole::measure;
  if (s == "both") return DimensionRole::both;
  throw ValidationError(path, "expected \"index\", \"measure\" or \"both\"");
}

DimensionConfig parse_dimension(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  reject_unknown(j, path,
                 {"name", "kind", "role", "domain", "scale_count", "resolution",
                  "labels"});
  DimensionConfig d;
  if (!j.contains("name")) throw ValidationError(path + ".name", "required");
  d.name = get<std::string>(j["name"], path + ".name");
  if (j.contains("kind")) d.kind = parse_kind(j["kind"], path + ".kind");
  if (j.contains("role")) d.role = parse_role(j["role"], path + ".role");
  if (j.contains("domain") && !is_auto(j["domain"])) {
    auto v = get<std::vector<double>>(j["domain"], path + ".domain");
    if (v.size() != 2) throw ValidationError(path + ".domain", "expected [min, max]");
    d.domain_min = v[0];
    d.domain_max = v[1];
  }
  if (j.contains("scale_count") && !is_auto(j["scale_count"])) {
    d.scale_count = get<std::uint32_t>(j["scale_count"], path + ".scale_count");
  }
  if (j.contains("resolution")) {
    d.resolution = get<double>(j["resolution"], path + ".resolution");
    if (!(*d.resolution > 0.0)) {
      throw ValidationError(path + ".resolution", "must be > 0");
    }
  }
  if (j.contains("labels") && !is_auto(j["labels"])) {
    d.labels = get<std::vector<std::string>>(j["labels"], path + ".labels");
  }
  return d;
}

}  // namespace

std::string to_string(DimensionKind k) {
  return k == DimensionKind::numeric ? "numeric" : "categorical";
}

std::string to_string(DimensionRole r) {
  switch (r) {
    case DimensionRole::index: return "index";
    case DimensionRole::measure: return "measure";
    case DimensionRole::both: return "both";
  }
  return "index";
}

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) {
      throw ValidationError(path.empty() ? it.key() : path + "." + it.key(),
                            "unknown field");
    }
  }
}

bool DimensionConfig::needs_scan() const {
  if (kind == DimensionKind::categorical) return labels.empty();
  return !domain_min.has_value();
}

bool SchemaConfig::needs_scan() const {
  for (const auto& d : dimensions) {
    if (d.needs_scan()) return true;
  }
  return false;
}

Schema SchemaConfig::schema() const {
  std::vector<DimensionSpec> dims;
  for (const auto& c : dimensions) {
    if (c.kind == DimensionKind::categorical) {
      if (c.labels.empty()) {
        throw SchemaError("dimension '" + c.name + "': labels not resolved");
      }
      dims.push_back(DimensionSpec::categorical(c.name, c.labels, c.role));
      continue;
    }
    if (!c.domain_min || !c.domain_max) {
      throw SchemaError("dimension '" + c.name + "': domain not resolved");
    }
    double lo = *c.domain_min, hi = *c.domain_max;
    std::uint32_t scales = kDefaultAutoScales;
    if (c.scale_count) {
      scales = *c.scale_count;
    } else if (c.resolution) {
      // Whole units of the given size starting at the domain minimum.
      auto units = static_cast<std::uint64_t>(std::ceil((hi - lo) / *c.resolution));
      scales = static_cast<std::uint32_t>(next_smooth_235(std::max<std::uint64_t>(units, 1)));
      hi = lo + *c.resolution * scales;
    }
    dims.push_back(DimensionSpec::numeric(c.name, lo, hi, scales, c.role));
  }
  Schema s(std::move(dims));
  if (s.index_count() > 5) {
    std::fprintf(stderr,
                 "warning: %zu index dimensions; storage grows quickly beyond 5\n",
                 s.index_count());
  }
  return s;
}

BuildConfig SchemaConfig::build_config(const Schema& schema) const {
  BuildConfig b = build;
  const auto measures = static_cast<std::uint32_t>(schema.measure_count());
  if (histogram_measure) {
    auto m = schema.find_measure_position(*histogram_measure);
    if (!m) {
      throw ValidationError("descriptor.measure",
                            "'" + *histogram_measure + "' is not a measure");
    }
    b.layout = DescriptorLayout::histogram(histogram_bins,
                                           static_cast<std::uint32_t>(*m), measures);
  } else {
    b.layout = DescriptorLayout::aggregate(measures);
  }
  return b;
}

SchemaConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ValidationError("", "config must be an object");
  reject_unknown(j, "", {"dimensions", "build", "lsh", "descriptor"});
  SchemaConfig c;
  if (!j.contains("dimensions") || !j["dimensions"].is_array()) {
    throw ValidationError("dimensions", "required array");
  }
  for (std::size_t i = 0; i < j["dimensions"].size(); ++i) {
    c.dimensions.push_back(parse_dimension(j["dimensions"][i],
                                           "dimensions[" + std::to_string(i) + "]"));
  }
  if (j.contains("build")) {
    const auto& b = j["build"];
    reject_unknown(b, "build",
                   {"m_max", "m_min", "reinsert_fraction", "sample_rate",
                    "max_sample", "seed", "max_cells_per_dim", "max_cells_total",
                    "categorical_full_resolution", "parallel"});
    auto& o = c.build;
    if (b.contains("m_max")) o.tree.m_max = get<std::uint32_t>(b["m_max"], "build.m_max");
    if (b.contains("m_min")) o.tree.m_min = get<std::uint32_t>(b["m_min"], "build.m_min");
    if (b.contains("reinsert_fraction")) {
      o.tree.reinsert_fraction = get<double>(b["reinsert_fraction"], "build.reinsert_fraction");
    }
    if (b.contains("sample_rate")) o.sample_rate = get<double>(b["sample_rate"], "build.sample_rate");
    if (b.contains("max_sample")) o.max_sample = get<std::uint64_t>(b["max_sample"], "build.max_sample");
    if (b.contains("seed")) o.seed = get<std::uint64_t>(b["seed"], "build.seed");
    if (b.contains("max_cells_per_dim")) {
      o.resolution.max_cells_per_dim = get<std::uint32_t>(b["max_cells_per_dim"], "build.max_cells_per_dim");
    }
    if (b.contains("max_cells_total")) {
      o.resolution.max_cells_total = get<std::uint64_t>(b["max_cells_total"], "build.max_cells_total");
    }
    if (b.contains("categorical_full_resolution")) {
      o.resolution.categorical_full_resolution =
          get<std::uint32_t>(b["categorical_full_resolution"], "build.categorical_full_resolution");
    }
    if (b.contains("parallel")) o.parallel = get<bool>(b["parallel"], "build.parallel");
  }
  if (j.contains("lsh")) {
    const auto& l = j["lsh"];
    reject_unknown(l, "lsh", {"projections", "tables", "bucket_width", "seed", "cover_segments"});
    auto& o = c.build.lsh;
    if (l.contains("projections")) o.projections = get<std::uint32_t>(l["projections"], "lsh.projections");
    if (l.contains("tables")) o.tables = get<std::uint32_t>(l["tables"], "lsh.tables");
    if (l.contains("bucket_width")) o.bucket_width = get<double>(l["bucket_width"], "lsh.bucket_width");
    if (l.contains("seed")) o.seed = get<std::uint64_t>(l["seed"], "lsh.seed");
    if (l.contains("cover_segments")) o.cover_segments = get<bool>(l["cover_segments"], "lsh.cover_segments");
  }
  if (j.contains("descriptor")) {
    const auto& d = j["descriptor"];
    reject_unknown(d, "descriptor", {"kind", "bins", "measure"});
    std::string kind = d.contains("kind") ? get<std::string>(d["kind"], "descriptor.kind")
                                          : "aggregate";
    if (kind == "histogram") {
      if (!d.contains("measure")) throw ValidationError("descriptor.measure", "required");
      c.histogram_measure = get<std::string>(d["measure"], "descriptor.measure");
      if (d.contains("bins")) c.histogram_bins = get<std::uint32_t>(d["bins"], "descriptor.bins");
    } else if (kind != "aggregate") {
      throw ValidationError("descriptor.kind", "expected \"aggregate\" or \"histogram\"");
    }
  }
  return c;
}

SchemaConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("", std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

Json config_to_json(const SchemaConfig& c) {
  Json dims = Json::array();
  for (const auto& d : c.dimensions) {
    Json o{{"name", d.name}, {"kind", to_string(d.kind)}, {"role", to_string(d.role)}};
    if (d.domain_min) {
      o["domain"] = {*d.domain_min, *d.domain_max};
    } else if (d.kind == DimensionKind::numeric) {
      o["domain"] = "auto";
    }
    if (d.scale_count) o["scale_count"] = *d.scale_count;
    if (d.resolution) o["resolution"] = *d.resolution;
    if (d.kind == DimensionKind::categorical) {
      o["labels"] = d.labels.empty() ? Json("auto") : Json(d.labels);
    }
    dims.push_back(o);
  }
  const auto& b = c.build;
  Json j{{"dimensions", dims},
         {"build",
          {{"m_max", b.tree.m_max},
           {"m_min", b.tree.m_min},
           {"reinsert_fraction", b.tree.reinsert_fraction},
           {"sample_rate", b.sample_rate},
           {"max_sample", b.max_sample},
           {"seed", b.seed},
           {"max_cells_per_dim", b.resolution.max_cells_per_dim},
           {"max_cells_total", b.resolution.max_cells_total},
           {"categorical_full_resolution", b.resolution.categorical_full_resolution},
           {"parallel", b.parallel}}},
         {"lsh",
          {{"projections", b.lsh.projections},
           {"tables", b.lsh.tables},
           {"bucket_width", b.lsh.bucket_width},
           {"seed", b.lsh.seed},
           {"cover_segments", b.lsh.cover_segments}}}};
  if (c.histogram_measure) {
    j["descriptor"] = {{"kind", "histogram"},
                       {"bins", c.histogram_bins},
                       {"measure", *c.histogram_measure}};
  } else {
    j["descriptor"] = {{"kind", "aggregate"}};
  }
  return j;
}

Json schema_to_json(const Schema& s) {
  Json dims = Json::array();
  for (const auto& d : s.dimensions()) {
    Json o{{"name", d.name},
           {"kind", to_string(d.kind)},
           {"role", to_string(d.role)},
           {"domain", {d.domain_min, d.domain_max}},
           {"scale_count", d.scale_count}};
    if (d.kind == DimensionKind::categorical) o["labels"] = d.category_labels;
    dims.push_back(o);
  }
  return Json{{"dimensions", dims}};
}

Schema schema_from_json(const Json& j) {
  SchemaConfig c;
  if (!j.is_object() || !j.contains("dimensions")) {
    throw FormatError("schema section lacks dimensions");
  }
  for (std::size_t i = 0; i < j["dimensions"].size(); ++i) {
    c.dimensions.push_back(parse_dimension(j["dimensions"][i],
                                           "dimensions[" + std::to_string(i) + "]"));
  }
  return c.schema();
}

}  // namespace ihcube
