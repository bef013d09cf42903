#include "ihcube/api.hpp"

#include <cmath>

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

double get_real(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  return j.get<double>();
}

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  return j;
}

const Json& require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "expected an array");
  return j;
}

GroupSpec parse_group(const Json& j, const std::string& path) {
  GroupSpec g;
  if (j.is_string()) {
    g.dim = j.get<std::string>();
    return g;
  }
  require_object(j, path);
  reject_unknown(j, path, {"dim", "strategy", "bins", "edges"});
  if (!j.contains("dim")) throw ValidationError(path + ".dim", "required");
  g.dim = get<std::string>(j["dim"], path + ".dim");
  if (j.contains("strategy")) {
    auto s = parse_bin_strategy(get<std::string>(j["strategy"], path + ".strategy"));
    if (!s) {
      throw ValidationError(path + ".strategy",
                            "expected equi_width, equi_data, log or explicit");
    }
    g.strategy = *s;
  }
  if (j.contains("bins")) {
    if (!j["bins"].is_number_integer() || j["bins"].get<std::int64_t>() < 1) {
      throw ValidationError(path + ".bins", "expected a positive integer");
    }
    g.bins = get<std::uint32_t>(j["bins"], path + ".bins");
  }
  if (j.contains("edges")) {
    const auto& e = require_array(j["edges"], path + ".edges");
    for (std::size_t i = 0; i < e.size(); ++i) {
      g.edges.push_back(get_real(e[i], path + ".edges[" + std::to_string(i) + "]"));
    }
    if (!j.contains("strategy")) g.strategy = BinStrategy::explicit_edges;
  }
  if (g.strategy == BinStrategy::explicit_edges && g.edges.empty()) {
    throw ValidationError(path + ".edges", "required for explicit binning");
  }
  if (g.strategy != BinStrategy::explicit_edges && !g.edges.empty()) {
    throw ValidationError(path + ".edges", "only allowed for explicit binning");
  }
  return g;
}

void parse_measure(const Json& j, QueryRequest& q) {
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else {
    require_object(j, "measure");
    reject_unknown(j, "measure", {"kind", "dim"});
    if (!j.contains("kind")) throw ValidationError("measure.kind", "required");
    kind = get<std::string>(j["kind"], "measure.kind");
    if (j.contains("dim")) q.measure_dim = get<std::string>(j["dim"], "measure.dim");
  }
  auto k = parse_measure_kind(kind);
  if (!k) throw ValidationError("measure.kind", "expected count, sum, mean or median");
  q.measure = *k;
  if (q.measure != MeasureKind::count && q.measure_dim.empty()) {
    throw ValidationError("measure.dim", "required for " + kind);
  }
}

Json optional_array(const std::vector<std::optional<double>>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(x ? Json(*x) : Json(nullptr));
  return a;
}

}  // namespace

ApiQuery parse_api_query(const Json& body) {
  require_object(body, "");
  reject_unknown(body, "", {"filter", "categories", "group_by", "measure",
                            "accuracy_mode", "want_error_bounds", "align_scales",
                            "include_timing"});
  ApiQuery out;
  auto& q = out.request;
  if (body.contains("filter")) {
    const auto& f = require_object(body["filter"], "filter");
    for (auto it = f.begin(); it != f.end(); ++it) {
      const std::string path = "filter." + it.key();
      const auto& r = require_array(it.value(), path);
      if (r.size() != 2) throw ValidationError(path, "expected [lo, hi]");
      q.ranges[it.key()] = {get_real(r[0], path + "[0]"), get_real(r[1], path + "[1]")};
    }
  }
  if (body.contains("categories")) {
    const auto& c = require_object(body["categories"], "categories");
    for (auto it = c.begin(); it != c.end(); ++it) {
      const std::string path = "categories." + it.key();
      q.categories[it.key()] =
          get<std::vector<std::string>>(require_array(it.value(), path), path);
    }
  }
  if (body.contains("group_by")) {
    const auto& g = require_array(body["group_by"], "group_by");
    for (std::size_t i = 0; i < g.size(); ++i) {
      q.group_by.push_back(parse_group(g[i], "group_by[" + std::to_string(i) + "]"));
    }
  }
  if (body.contains("measure")) parse_measure(body["measure"], q);
  if (body.contains("accuracy_mode")) {
    q.accuracy = AccuracyMode::parse(get<std::string>(body["accuracy_mode"], "accuracy_mode"));
  }
  if (body.contains("want_error_bounds")) {
    q.want_error_bounds = get<bool>(body["want_error_bounds"], "want_error_bounds");
  }
  if (body.contains("align_scales")) {
    q.align_scales = get<bool>(body["align_scales"], "align_scales");
  }
  if (body.contains("include_timing")) {
    out.include_timing = get<bool>(body["include_timing"], "include_timing");
  }
  return out;
}

Json result_to_json(const QueryResult& r, bool include_timing) {
  Json j{{"shape", r.shape}, {"edges", r.edges}, {"values", optional_array(r.values)}};
  if (r.has_bounds) {
    j["lower"] = optional_array(r.lower);
    j["upper"] = optional_array(r.upper);
    j["error"] = optional_array(r.error);
  }
  Json meta{{"candidates", r.meta.candidates},
            {"coincident_fraction", r.meta.coincident_fraction
                                        ? Json(*r.meta.coincident_fraction)
                                        : Json(nullptr)}};
  if (include_timing) meta["elapsed_us"] = r.meta.elapsed_us;
  j["meta"] = meta;
  return j;
}

Json schema_document(const Index& index) {
  Json j = schema_to_json(index.schema);
  Json idx = Json::array();
  for (const auto& a : index.axes) idx.push_back(a.name);
  j["index_dimensions"] = idx;
  Json m = Json::array();
  for (std::size_t i = 0; i < index.schema.measure_count(); ++i) {
    m.push_back(index.schema.measure_dim(i).name);
  }
  j["measure_dimensions"] = m;
  j["descriptor"] = index.layout.kind == DescriptorKind::histogram ? "histogram" : "aggregate";
  j["tree_height"] = index.stats.tree_height;
  return j;
}

Json stats_document(const BuildStats& s) {
  return Json{{"rows", s.rows},
              {"tree_height", s.tree_height},
              {"subspaces", s.subspaces},
              {"bins", s.bins},
              {"storage_bytes", s.storage_bytes},
              {"build_seconds", s.build_seconds}};
}

Json error_document(int status, const std::string& field, const std::string& message) {
  return Json{{"error", {{"status", status}, {"field", field}, {"message", message}}}};
}

ApiResponse handle_query(const Index& index, const std::string& body,
                         const ExecOptions& options) {
  ApiResponse out;
  try {
    Json j;
    try {
      j = Json::parse(body);
    } catch (const Json::parse_error& e) {
      throw ValidationError("", std::string("malformed JSON: ") + e.what());
    }
    auto q = parse_api_query(j);
    auto result = execute(index, q.request, options);
    out.elapsed_us = result.meta.elapsed_us;
    out.body = result_to_json(result, q.include_timing).dump();
  } catch (const ValidationError& e) {
    out.status = 400;
    std::string msg = e.what();
    if (!e.field().empty() && msg.rfind(e.field() + ": ", 0) == 0) {
      msg.erase(0, e.field().size() + 2);
    }
    out.body = error_document(400, e.field(), msg).dump();
  } catch (const UnsupportedError& e) {
    out.status = 422;
    out.body = error_document(422, "", e.what()).dump();
  }
  return out;
}

}  // namespace ihcube
