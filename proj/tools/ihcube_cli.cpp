#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ihcube/api.hpp"
#include "ihcube/bench/experiments.hpp"
#include "ihcube/csv.hpp"
#include "ihcube/error.hpp"
#include "ihcube/server.hpp"
#include "ihcube/store.hpp"

using namespace ihcube;

namespace {

QueryServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError("", "'" + path + "' is not valid JSON: " + e.what());
  }
}

int cmd_build(const std::string& config_path, const std::string& data_path,
              const std::string& out_path) {
  SchemaConfig cfg = load_config(config_path);
  if (cfg.needs_scan()) cfg = resolve_config(cfg, data_path);
  const Schema schema = cfg.schema();
  CsvSource source(data_path, schema);
  Index index = build_index(schema, source, cfg.build_config(schema));
  save_index(index, out_path);
  std::fprintf(stderr, "ingested %llu rows, skipped %llu\n",
               static_cast<unsigned long long>(source.rows()),
               static_cast<unsigned long long>(source.skipped()));
  std::cout << stats_document(index.stats).dump(2) << '\n';
  return 0;
}

int cmd_query(const std::string& index_path, const std::string& request) {
  const Index index = load_index(index_path);
  const std::string body = request.rfind('{', 0) == 0 ? request : read_file(request);
  auto r = handle_query(index, body);
  std::cout << r.body << '\n';
  if (r.status != 200) return 1;
  std::fprintf(stderr, "elapsed_us %.1f\n", r.elapsed_us);
  return 0;
}

int cmd_serve(const std::string& index_path, const std::string& host, int port) {
  QueryServer server;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.load_async([index_path] { return load_index(index_path); });
  std::fprintf(stderr, "serving on %s:%d, loading %s\n", host.c_str(), port, index_path.c_str());
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}

int cmd_bench(const std::string& experiment, const std::string& config_path,
              const std::string& out_dir) {
  auto kind = bench::parse_experiment_kind(experiment);
  if (!kind) throw ValidationError("experiment", "unknown experiment '" + experiment + "'");
  auto cfg = config_path.empty() ? bench::default_experiment_config(*kind)
                                 : bench::parse_experiment_config(*kind, read_json(config_path));
  auto report = bench::run_experiment(*kind, cfg);
  bench::write_report(report, out_dir);
  std::cout << report.text;
  return 0;
}

int cmd_stats(const std::string& index_path) {
  const Index index = load_index(index_path);
  std::cout << stats_document(index.stats).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ihcube: approximate aggregate queries over partitioned integral histograms"};
  app.require_subcommand(1);

  std::string config, data, out, index_path, request, host = "0.0.0.0", experiment;
  int port = 8080;

  auto* build = app.add_subcommand("build", "Build an index from a CSV file");
  build->add_option("--config", config, "Schema and build config (JSON)")->required();
  build->add_option("--data", data, "CSV with a header row")->required();
  build->add_option("--out", out, "Index file to write")->required();

  auto* query = app.add_subcommand("query", "Run one request against an index file");
  query->add_option("--index", index_path)->required();
  query->add_option("--request", request, "Request JSON, inline or a file path")->required();

  auto* serve = app.add_subcommand("serve", "Serve /schema, /stats and /query over HTTP");
  serve->add_option("--index", index_path)->required();
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host);

  auto* bench = app.add_subcommand("bench", "Run an experiment and write its report");
  bench->add_option("experiment", experiment,
                    "construction_scaling | height_tradeoff | lsh_vs_tree | scale_alignment | latency")
      ->required();
  bench->add_option("--config", config, "Experiment overrides (JSON)");
  bench->add_option("--out", out, "Report directory")->required();

  bench::SplomSpec spec;
  std::string config_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic SPLOM CSV");
  generate->add_option("--rows", spec.rows);
  generate->add_option("--dims", spec.dims)->check(CLI::Range(1, 5));
  generate->add_option("--chart-bins", spec.chart_bins);
  generate->add_option("--clusters", spec.clusters);
  generate->add_option("--seed", spec.seed);
  generate->add_flag("--skewed", spec.skewed, "Heavy-tailed 2D layout");
  generate->add_option("--out", out, "CSV to write")->required();
  generate->add_option("--config-out", config_out, "Also write a matching build config");

  auto* stats = app.add_subcommand("stats", "Print build statistics of an index file");
  stats->add_option("--index", index_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build(config, data, out);
    if (*query) return cmd_query(index_path, request);
    if (*serve) return cmd_serve(index_path, host, port);
    if (*bench) return cmd_bench(experiment, config, out);
    if (*generate) {
      if (spec.skewed) spec.dims = 2;
      bench::write_splom_csv(spec, out);
      if (!config_out.empty()) {
        std::ofstream(config_out) << config_to_json(bench::splom_config(spec)).dump(2) << '\n';
      }
      return 0;
    }
    if (*stats) return cmd_stats(index_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
