#include <benchmark/benchmark.h>

#include "ihcube/bench/experiments.hpp"

using namespace ihcube;
using namespace ihcube::bench;

namespace {

const Index& skewed_index() {
  static const Index idx = [] {
    SplomSpec s;
    s.skewed = true;
    s.dims = 2;
    s.rows = 200000;
    s.chart_bins = 360;
    return build_splom_index(s, splom_config(s));
  }();
  return idx;
}

void BM_Heatmap(benchmark::State& state, const char* mode) {
  const auto& idx = skewed_index();
  WorkloadSpec w;
  w.queries = 64;
  w.bins = static_cast<std::uint32_t>(state.range(0));
  std::vector<QuerySpec> specs;
  for (const auto& q : make_workload(idx, w, true)) {
    auto s = plan_query(idx, q.request);
    s.accuracy = AccuracyMode::parse(mode);
    specs.push_back(s);
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(execute(idx, specs[i++ % specs.size()]));
  }
}
BENCHMARK_CAPTURE(BM_Heatmap, tree, "tree")->Arg(10)->Arg(60);
BENCHMARK_CAPTURE(BM_Heatmap, lsh, "lsh")->Arg(10)->Arg(60);
BENCHMARK_CAPTURE(BM_Heatmap, tree_at_1, "tree@1")->Arg(10)->Arg(60);

void BM_QueryGrid(benchmark::State& state) {
  const auto& idx = skewed_index();
  const auto& ih = idx.ihs[idx.ihs.size() / 2];
  const Rect box = ih.bounds(idx.axes);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<ScaleCoord>> edges(2);
  for (std::size_t d = 0; d < 2; ++d) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = box[d].lo + box[d].length() * (static_cast<double>(i) + 0.3) /
                                       static_cast<double>(n + 1);
      edges[d].push_back(to_scale(idx.axes[d], x));
    }
  }
  DescriptorGrid grid;
  for (auto _ : state) {
    ih.query_grid(edges, Rounding::nearest, grid);
    benchmark::DoNotOptimize(grid.counts.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}
BENCHMARK(BM_QueryGrid)->Arg(8)->Arg(60);

void BM_Build(benchmark::State& state) {
  SplomSpec s;
  s.dims = 3;
  s.rows = static_cast<std::uint64_t>(state.range(0));
  const auto cfg = splom_config(s);
  for (auto _ : state) benchmark::DoNotOptimize(build_splom_index(s, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * s.rows));
}
BENCHMARK(BM_Build)->Arg(20000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
