#include "ihcube/bench/experiments.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ihcube/error.hpp"
#include "ihcube/oracle.hpp"
#include "ihcube/server.hpp"

namespace ihcube::bench {
namespace {

template <class T>
void read_field(const Json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const Json::exception&) {
    throw ValidationError(key, "wrong type");
  }
}

WorkloadSpec parse_workload(const Json& j, WorkloadSpec w) {
  if (!j.is_object()) throw ValidationError("workload", "expected an object");
  reject_unknown(j, "workload", {"queries", "policy", "group_dims", "bins", "min_extent",
                                 "max_extent", "filter_probability", "seed"});
  read_field(j, "queries", w.queries);
  read_field(j, "group_dims", w.group_dims);
  read_field(j, "bins", w.bins);
  read_field(j, "min_extent", w.min_extent);
  read_field(j, "max_extent", w.max_extent);
  read_field(j, "filter_probability", w.filter_probability);
  read_field(j, "seed", w.seed);
  if (j.contains("policy")) {
    std::string s;
    read_field(j, "policy", s);
    auto p = parse_workload_policy(s);
    if (!p) throw ValidationError("workload.policy", "expected random, zoom or brush");
    w.policy = *p;
  }
  if (!(w.min_extent > 0.0 && w.max_extent >= w.min_extent && w.max_extent <= 1.0)) {
    throw ValidationError("workload.min_extent", "need 0 < min_extent <= max_extent <= 1");
  }
  return w;
}

std::vector<std::string> summary_cells(const Summary& s) {
  return {fmt(s.median), fmt(s.mean), fmt(s.stdev), fmt(s.p90)};
}

const std::vector<std::string> kSummaryHeader = {"median", "mean", "stdev", "p90"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << (i ? "  " : "") << cells[i] << std::string(w[i] - cells[i].size(), ' ');
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

void add_table(Report& r, const std::string& name, std::vector<std::string> header,
               std::vector<std::vector<std::string>> rows) {
  r.text += name + "\n" + render(header, rows) + "\n";
  r.tables[name] = {std::move(header), std::move(rows)};
}

std::vector<QuerySpec> plan_all(const Index& index, const std::vector<WorkloadQuery>& w) {
  std::vector<QuerySpec> out;
  for (const auto& q : w) out.push_back(plan_query(index, q.request));
  return out;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::construction_scaling: return "construction_scaling";
    case ExperimentKind::height_tradeoff: return "height_tradeoff";
    case ExperimentKind::lsh_vs_tree: return "lsh_vs_tree";
    case ExperimentKind::scale_alignment: return "scale_alignment";
    case ExperimentKind::latency: return "latency";
  }
  return "";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::construction_scaling, ExperimentKind::height_tradeoff,
                 ExperimentKind::lsh_vs_tree, ExperimentKind::scale_alignment,
                 ExperimentKind::latency}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

ExperimentConfig default_experiment_config(ExperimentKind kind) {
  ExperimentConfig c;
  SplomSpec skewed;
  skewed.skewed = true;
  skewed.dims = 2;
  skewed.rows = 1000000;
  skewed.chart_bins = 360;
  skewed.seed = 3;

  switch (kind) {
    case ExperimentKind::construction_scaling:
      c.data.dims = 5;
      c.data.chart_bins = 10;
      c.rows = {100000, 1000000, 5000000};
      c.workload.bins = 60;
      c.workload.queries = 100;
      break;
    case ExperimentKind::height_tradeoff:
      c.data = skewed;
      c.workload.queries = 200;
      c.workload.bins = 10;
      break;
    case ExperimentKind::lsh_vs_tree:
      c.data.dims = 5;
      c.data.chart_bins = 10;
      c.tables = {1, 2, 4, 8, 16};
      c.workload.queries = 100;
      break;
    case ExperimentKind::scale_alignment:
      c.data = skewed;
      c.workload.queries = 300;
      c.workload.bins = 10;
      c.bins_curve = {5, 10, 20, 40};
      break;
    case ExperimentKind::latency:
      c.data = skewed;
      c.workload.queries = 200;
      c.workload.bins = 60;
      c.end_to_end = true;
      break;
  }
  c.schema = splom_config(c.data);
  if (kind == ExperimentKind::construction_scaling) c.schema.build.sample_rate = 0.02;
  if (kind == ExperimentKind::height_tradeoff) c.schema.build.tree.m_max = 16;
  return c;
}

ExperimentConfig parse_experiment_config(ExperimentKind kind, const Json& j) {
  if (!j.is_object()) throw ValidationError("", "expected an object");
  reject_unknown(j, "", {"data", "build", "lsh", "descriptor", "workload", "rows", "tables",
                         "bins_curve", "rect_queries", "repeats", "aligned",
                         "point_bucket_width", "end_to_end"});
  ExperimentConfig c = default_experiment_config(kind);
  if (j.contains("data")) c.data = parse_splom_spec(j["data"]);
  // The schema follows the data; build, lsh and descriptor go through the
  // regular config parser on top of the defaults.
  Json sc = config_to_json(c.schema);
  sc["dimensions"] = config_to_json(splom_config(c.data))["dimensions"];
  for (const char* key : {"build", "lsh", "descriptor"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_object()) throw ValidationError(key, "expected an object");
    for (auto it = j[key].begin(); it != j[key].end(); ++it) sc[key][it.key()] = it.value();
  }
  c.schema = parse_config(sc);
  if (j.contains("workload")) c.workload = parse_workload(j["workload"], c.workload);
  read_field(j, "rows", c.rows);
  read_field(j, "tables", c.tables);
  read_field(j, "bins_curve", c.bins_curve);
  read_field(j, "rect_queries", c.rect_queries);
  read_field(j, "repeats", c.repeats);
  read_field(j, "aligned", c.aligned);
  read_field(j, "point_bucket_width", c.point_bucket_width);
  read_field(j, "end_to_end", c.end_to_end);
  return c;
}

Index build_splom_index(const SplomSpec& data, const SchemaConfig& schema_cfg) {
  const Schema schema = schema_cfg.schema();
  return build_index(schema, SplomSource(data), schema_cfg.build_config(schema));
}

std::vector<ConstructionPoint> construction_scaling(const ExperimentConfig& c) {
  std::vector<ConstructionPoint> out;
  for (auto rows : c.rows) {
    SplomSpec data = c.data;
    data.rows = rows;
    const Index index = build_splom_index(data, c.schema);
    const auto queries = make_workload(index, c.workload, true);
    std::vector<double> lat;
    for (const auto& spec : plan_all(index, queries)) {
      lat.push_back(engine_latency_us(index, spec, c.repeats, {}));
    }
    out.push_back({rows, index.stats, summarize(lat)});
  }
  return out;
}

std::vector<HeightPoint> height_tradeoff(const ExperimentConfig& c) {
  const Index index = build_splom_index(c.data, c.schema);
  const auto points = generate_points(c.data);
  const auto queries = make_workload(index, c.workload, c.aligned);
  const std::uint32_t h_max = index.stats.tree_height;
  std::vector<std::vector<double>> are(h_max), lat(h_max);
  for (const auto& q : queries) {
    const QuerySpec base = plan_query(index, q.request);
    const QueryResult exact = scan_oracle(index.schema, points, base, true);
    // Heights interleaved per query so drift in machine load hits all alike.
    for (std::uint32_t h = 1; h <= h_max; ++h) {
      QuerySpec s = base;
      s.accuracy = {CandidateMode::tree_at_height, h};
      const auto r = execute(index, s);
      are[h - 1].push_back(average_relative_error(r.values, exact.values));
      lat[h - 1].push_back(std::min(r.meta.elapsed_us,
                                    engine_latency_us(index, s, c.repeats, {})));
    }
  }
  std::vector<HeightPoint> out;
  for (std::uint32_t h = 1; h <= h_max; ++h) {
    out.push_back({h, summarize(are[h - 1]), summarize(lat[h - 1])});
  }
  return out;
}

LshComparison lsh_vs_tree(const ExperimentConfig& c) {
  Index index = build_splom_index(c.data, c.schema);
  LshComparison out;
  const auto rects = random_rects(index.axes, c.rect_queries, 0.05, 0.5, c.workload.seed);
  out.queries = rects.size();
  std::vector<std::vector<std::uint32_t>> truth;
  std::vector<double> rec;
  for (const auto& r : rects) {
    truth.push_back(tree_candidates(index, r));
    const auto found = lsh_candidates(index, r);
    for (auto f : found) {
      out.violations += !std::binary_search(truth.back().begin(), truth.back().end(), f);
    }
    rec.push_back(recall(found, truth.back()));
  }
  out.recall = summarize(rec);

  std::vector<Rect> mbrs;
  for (auto id : index.tree.leaves()) mbrs.push_back(index.tree.node(id).mbr);
  const LshIndex original = index.lsh;
  for (bool segments : {true, false}) {
    for (auto t : c.tables) {
      LshParams p = original.params();
      p.tables = t;
      p.cover_segments = segments;
      if (!segments) p.bucket_width = c.point_bucket_width;
      index.lsh = LshIndex::build(index.axes, mbrs, p);
      std::vector<double> rt;
      for (std::size_t i = 0; i < rects.size(); ++i) {
        rt.push_back(recall(lsh_candidates(index, rects[i]), truth[i]));
      }
      out.curve.push_back({t, segments, summarize(rt)});
    }
  }
  index.lsh = original;

  const auto points = generate_points(c.data);
  std::vector<double> la, lt, aa, at;
  for (const auto& q : make_workload(index, c.workload, c.aligned)) {
    QueryRequest r = q.request;
    r.accuracy = {CandidateMode::lsh, 0};
    auto e = evaluate(index, points, r, c.repeats);
    la.push_back(e.latency_us);
    aa.push_back(e.are);
    r.accuracy = {CandidateMode::tree, 0};
    e = evaluate(index, points, r, c.repeats);
    lt.push_back(e.latency_us);
    at.push_back(e.are);
  }
  out.lsh_latency_us = summarize(la);
  out.tree_latency_us = summarize(lt);
  out.lsh_are = summarize(aa);
  out.tree_are = summarize(at);
  return out;
}

AlignmentComparison scale_alignment(const ExperimentConfig& c) {
  const Index index = build_splom_index(c.data, c.schema);
  const auto points = generate_points(c.data);
  auto measure = [&](std::uint32_t bins) {
    WorkloadSpec w = c.workload;
    w.bins = bins;
    AlignmentPoint p{bins};
    const auto aligned = make_workload(index, w, true);
    const auto unaligned = make_workload(index, w, false);
    for (std::size_t i = 0; i < aligned.size(); ++i) {
      auto a = evaluate(index, points, aligned[i].request);
      auto u = evaluate(index, points, unaligned[i].request);
      p.aligned_are += a.are;
      p.unaligned_are += u.are;
      p.aligned_coincident += a.coincident_fraction.value_or(0.0);
      p.unaligned_coincident += u.coincident_fraction.value_or(0.0);
    }
    const double n = static_cast<double>(std::max<std::size_t>(aligned.size(), 1));
    p.aligned_are /= n;
    p.unaligned_are /= n;
    p.aligned_coincident /= n;
    p.unaligned_coincident /= n;
    return p;
  };
  AlignmentComparison out;
  out.queries = c.workload.queries;
  out.main = measure(c.workload.bins);
  for (auto b : c.bins_curve) out.curve.push_back(b == c.workload.bins ? out.main : measure(b));
  return out;
}

std::vector<double> http_latencies_us(const Index& index,
                                      const std::vector<WorkloadQuery>& queries) {
  QueryServer server;
  server.set_index(index);
  const int port = server.bind_any_port("127.0.0.1");
  if (port < 0) throw Error("cannot bind a loopback port");
  std::thread t([&] { server.listen_after_bind(); });
  httplib::Client client("127.0.0.1", port);
  client.set_keep_alive(true);
  std::vector<double> out;
  for (const auto& q : queries) {
    Json body = Json::object();
    for (const auto& [name, iv] : q.request.ranges) body["filter"][name] = {iv.lo, iv.hi};
    Json groups = Json::array();
    for (const auto& g : q.request.group_by) {
      groups.push_back({{"dim", g.dim}, {"strategy", to_string(g.strategy)}, {"bins", g.bins}});
    }
    body["group_by"] = groups;
    body["align_scales"] = q.request.align_scales;
    const std::string text = body.dump();
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post("/query", text, "application/json");
    const double us = std::chrono::duration<double, std::micro>(
                          std::chrono::steady_clock::now() - start).count();
    if (!res || res->status != 200) {
      server.stop();
      t.join();
      throw Error("HTTP query failed");
    }
    out.push_back(us);
  }
  server.stop();
  t.join();
  return out;
}

LatencyReport latency_profile(const ExperimentConfig& c) {
  const Index index = build_splom_index(c.data, c.schema);
  const auto queries = make_workload(index, c.workload, c.aligned);
  std::vector<double> lat;
  for (const auto& spec : plan_all(index, queries)) {
    lat.push_back(engine_latency_us(index, spec, c.repeats, {}));
  }
  LatencyReport out{index.stats.rows, summarize(lat), std::nullopt};
  if (c.end_to_end) out.end_to_end_us = summarize(http_latencies_us(index, queries));
  return out;
}

Report run_experiment(ExperimentKind kind, const ExperimentConfig& c) {
  Report r;
  r.data["experiment"] = to_string(kind);
  r.data["data"] = splom_spec_to_json(c.data);
  r.data["config"] = config_to_json(c.schema);
  r.text = "experiment: " + to_string(kind) + "\n\n";

  switch (kind) {
    case ExperimentKind::construction_scaling: {
      std::vector<std::vector<std::string>> rows;
      Json pts = Json::array();
      for (const auto& p : construction_scaling(c)) {
        rows.push_back(concat({std::to_string(p.rows), fmt(p.stats.build_seconds),
                               std::to_string(p.stats.storage_bytes),
                               std::to_string(p.stats.tree_height),
                               std::to_string(p.stats.subspaces), std::to_string(p.stats.bins),
                               std::to_string(p.stats.skeleton_points)},
                              summary_cells(p.latency_us)));
        pts.push_back({{"rows", p.rows},
                       {"build_seconds", p.stats.build_seconds},
                       {"storage_bytes", p.stats.storage_bytes},
                       {"tree_height", p.stats.tree_height},
                       {"subspaces", p.stats.subspaces},
                       {"bins", p.stats.bins},
                       {"skeleton_points", p.stats.skeleton_points},
                       {"latency_us", summary_to_json(p.latency_us)}});
      }
      r.data["points"] = pts;
      add_table(r, "construction",
                concat({"rows", "build_s", "storage_bytes", "height", "subspaces", "bins",
                        "skeleton"},
                       {"latency_median_us", "latency_mean_us", "latency_stdev_us",
                        "latency_p90_us"}),
                rows);
      break;
    }
    case ExperimentKind::height_tradeoff: {
      std::vector<std::vector<std::string>> rows;
      Json pts = Json::array();
      for (const auto& p : height_tradeoff(c)) {
        rows.push_back(concat(concat({std::to_string(p.height)}, summary_cells(p.are)),
                              summary_cells(p.latency_us)));
        pts.push_back({{"height", p.height},
                       {"are", summary_to_json(p.are)},
                       {"latency_us", summary_to_json(p.latency_us)}});
      }
      r.data["points"] = pts;
      add_table(r, "height",
                {"height", "are_median", "are_mean", "are_stdev", "are_p90",
                 "latency_median_us", "latency_mean_us", "latency_stdev_us", "latency_p90_us"},
                rows);
      break;
    }
    case ExperimentKind::lsh_vs_tree: {
      const auto l = lsh_vs_tree(c);
      r.data["queries"] = l.queries;
      r.data["violations"] = l.violations;
      r.data["recall"] = summary_to_json(l.recall);
      Json curve = Json::array();
      std::vector<std::vector<std::string>> rows;
      for (const auto& p : l.curve) {
        curve.push_back({{"tables", p.tables},
                         {"cover_segments", p.cover_segments},
                         {"recall", summary_to_json(p.recall)}});
        rows.push_back({std::to_string(p.tables), p.cover_segments ? "segments" : "point",
                        fmt(p.recall.median), fmt(p.recall.mean), fmt(p.recall.min)});
      }
      r.data["curve"] = curve;
      r.text += "queries " + std::to_string(l.queries) + ", violations " +
                std::to_string(l.violations) + ", recall mean " + fmt(l.recall.mean) +
                ", median " + fmt(l.recall.median) + "\n\n";
      add_table(r, "recall_vs_tables", {"tables", "hashing", "median", "mean", "min"}, rows);
      r.data["lsh"] = {{"latency_us", summary_to_json(l.lsh_latency_us)},
                       {"are", summary_to_json(l.lsh_are)}};
      r.data["tree"] = {{"latency_us", summary_to_json(l.tree_latency_us)},
                        {"are", summary_to_json(l.tree_are)}};
      add_table(r, "modes",
                concat(concat({"mode"}, {"latency_median_us", "latency_mean_us",
                                         "latency_stdev_us", "latency_p90_us"}),
                       {"are_median", "are_mean"}),
                {concat(concat({"lsh"}, summary_cells(l.lsh_latency_us)),
                        {fmt(l.lsh_are.median), fmt(l.lsh_are.mean)}),
                 concat(concat({"tree"}, summary_cells(l.tree_latency_us)),
                        {fmt(l.tree_are.median), fmt(l.tree_are.mean)})});
      break;
    }
    case ExperimentKind::scale_alignment: {
      const auto a = scale_alignment(c);
      auto row = [](const AlignmentPoint& p) {
        const double ratio = p.unaligned_are > 0 ? p.aligned_are / p.unaligned_are : 0.0;
        return std::vector<std::string>{std::to_string(p.bins), fmt(p.aligned_are),
                                        fmt(p.unaligned_are), fmt(ratio),
                                        fmt(p.aligned_coincident), fmt(p.unaligned_coincident)};
      };
      auto json = [](const AlignmentPoint& p) {
        return Json{{"bins", p.bins},
                    {"aligned_are", p.aligned_are},
                    {"unaligned_are", p.unaligned_are},
                    {"aligned_coincident", p.aligned_coincident},
                    {"unaligned_coincident", p.unaligned_coincident}};
      };
      r.data["queries"] = a.queries;
      r.data["main"] = json(a.main);
      Json curve = Json::array();
      std::vector<std::vector<std::string>> rows;
      for (const auto& p : a.curve) {
        curve.push_back(json(p));
        rows.push_back(row(p));
      }
      r.data["curve"] = curve;
      const std::vector<std::string> header = {"bins", "aligned_are", "unaligned_are", "ratio",
                                               "aligned_coincident", "unaligned_coincident"};
      add_table(r, "alignment", header, {row(a.main)});
      add_table(r, "alignment_curve", header, rows);
      break;
    }
    case ExperimentKind::latency: {
      const auto l = latency_profile(c);
      r.data["rows"] = l.rows;
      r.data["engine_us"] = summary_to_json(l.engine_us);
      std::vector<std::vector<std::string>> rows = {concat({"engine"}, summary_cells(l.engine_us))};
      if (l.end_to_end_us) {
        r.data["end_to_end_us"] = summary_to_json(*l.end_to_end_us);
        rows.push_back(concat({"http"}, summary_cells(*l.end_to_end_us)));
      }
      add_table(r, "latency", concat({"boundary"}, kSummaryHeader), rows);
      break;
    }
  }
  return r;
}

void write_report(const Report& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ofstream(base / "report.json") << r.data.dump(2) << '\n';
  std::ofstream(base / "report.txt") << r.text;
  for (const auto& [name, t] : r.tables) {
    write_table((base / (name + ".tsv")).string(), t.first, t.second);
  }
}

}  // namespace ihcube::bench
