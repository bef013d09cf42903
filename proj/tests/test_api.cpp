#include <gtest/gtest.h>

#include <filesystem>
#include <future>
#include <thread>

#include <httplib.h>

#include "ihcube/api.hpp"
#include "ihcube/bench/splom.hpp"
#include "ihcube/error.hpp"
#include "ihcube/server.hpp"
#include "ihcube/store.hpp"

using namespace ihcube;

namespace {

const std::vector<std::string> kWeekdays = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};

const Index& splom_index() {
  static const Index idx = [] {
    bench::SplomSpec s;
    s.rows = 5000;
    s.chart_bins = 12;
    auto cfg = bench::splom_config(s);
    auto schema = cfg.schema();
    return build_index(schema, bench::SplomSource(s), cfg.build_config(schema));
  }();
  return idx;
}

const Index& weekday_index() {
  static const Index idx = [] {
    Schema schema({DimensionSpec::numeric("hour", 0, 24, 24),
                   DimensionSpec::categorical("weekday", kWeekdays),
                   DimensionSpec::numeric("fare", 0, 50, 1, DimensionRole::measure)});
    std::vector<DataPoint> pts;
    for (int i = 0; i < 700; ++i) {
      pts.push_back({{static_cast<double>(i % 24) + 0.5, static_cast<double>(i % 7)},
                     {static_cast<double>(i % 50)}});
    }
    BuildConfig c;
    c.layout = DescriptorLayout::aggregate(1);
    return build_index(schema, VectorSource(pts), c);
  }();
  return idx;
}

std::string field_of(const std::string& body) {
  try {
    parse_api_query(Json::parse(body));
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST(Api, ParseFullRequest) {
  auto q = parse_api_query(Json::parse(R"({
    "filter": {"d0": [10, 20.5]},
    "categories": {"weekday": ["Mon"]},
    "group_by": ["d1", {"dim": "d2", "strategy": "log", "bins": 4},
                 {"dim": "d3", "edges": [0, 50, 100]}],
    "measure": {"kind": "sum", "dim": "value"},
    "accuracy_mode": "tree@2",
    "want_error_bounds": true,
    "align_scales": false,
    "include_timing": true})"));
  EXPECT_EQ(q.request.ranges.at("d0").hi, 20.5);
  EXPECT_EQ(q.request.categories.at("weekday"), std::vector<std::string>{"Mon"});
  ASSERT_EQ(q.request.group_by.size(), 3u);
  EXPECT_EQ(q.request.group_by[0].strategy, BinStrategy::equi_width);
  EXPECT_EQ(q.request.group_by[1].strategy, BinStrategy::log);
  EXPECT_EQ(q.request.group_by[1].bins, 4u);
  EXPECT_EQ(q.request.group_by[2].strategy, BinStrategy::explicit_edges);
  EXPECT_EQ(q.request.measure, MeasureKind::sum);
  EXPECT_EQ(q.request.measure_dim, "value");
  EXPECT_EQ(q.request.accuracy, (AccuracyMode{CandidateMode::tree_at_height, 2}));
  EXPECT_TRUE(q.request.want_error_bounds);
  EXPECT_FALSE(q.request.align_scales);
  EXPECT_TRUE(q.include_timing);
}

TEST(Api, FieldPathsOnRejection) {
  EXPECT_EQ(field_of(R"({"filtr": {}})"), "filtr");
  EXPECT_EQ(field_of(R"({"filter": {"d0": [1]}})"), "filter.d0");
  EXPECT_EQ(field_of(R"({"filter": {"d0": [1, "x"]}})"), "filter.d0[1]");
  EXPECT_EQ(field_of(R"({"group_by": [{"dim": "d0", "bins": 0}]})"), "group_by[0].bins");
  EXPECT_EQ(field_of(R"({"group_by": ["d0", {"dim": "d1", "colour": 1}]})"), "group_by[1].colour");
  EXPECT_EQ(field_of(R"({"group_by": [{"dim": "d0", "strategy": "explicit"}]})"), "group_by[0].edges");
  EXPECT_EQ(field_of(R"({"group_by": [{"dim": "d0", "strategy": "fancy"}]})"), "group_by[0].strategy");
  EXPECT_EQ(field_of(R"({"measure": "sum"})"), "measure.dim");
  EXPECT_EQ(field_of(R"({"measure": {"kind": "mode"}})"), "measure.kind");
  EXPECT_EQ(field_of(R"({"accuracy_mode": "fast"})"), "accuracy_mode");
  EXPECT_EQ(field_of(R"({"want_error_bounds": "yes"})"), "want_error_bounds");
  EXPECT_EQ(field_of(R"([1, 2])"), "");
}

TEST(Api, StatusCodes) {
  const auto& idx = splom_index();
  EXPECT_EQ(handle_query(idx, "{}").status, 200);
  auto bad = handle_query(idx, R"({"filter": {"nope": [0, 1]}})");
  EXPECT_EQ(bad.status, 400);
  auto err = Json::parse(bad.body)["error"];
  EXPECT_EQ(err["field"], "filter.nope");
  EXPECT_EQ(err["status"], 400);
  EXPECT_EQ(handle_query(idx, "{not json").status, 400);
  auto median = handle_query(
      idx, R"({"measure": {"kind": "median", "dim": "value"}, "want_error_bounds": true})");
  EXPECT_EQ(median.status, 422);
}

TEST(Api, FullDomainCountAndDeterminism) {
  const auto& idx = splom_index();
  auto a = handle_query(idx, "{}");
  auto j = Json::parse(a.body);
  EXPECT_EQ(j["values"][0], 5000.0);
  EXPECT_EQ(j["shape"], Json::array());
  EXPECT_FALSE(j["meta"].contains("elapsed_us"));
  const std::string req =
      R"({"group_by": [{"dim": "d0", "bins": 7}, {"dim": "d1", "bins": 5}],
          "filter": {"d2": [13.3, 77.7]}, "want_error_bounds": true, "align_scales": false})";
  auto r1 = handle_query(idx, req);
  auto r2 = handle_query(idx, req);
  EXPECT_EQ(r1.body, r2.body);
  auto k = Json::parse(r1.body);
  EXPECT_EQ(k["shape"], (Json{7, 5}));
  EXPECT_EQ(k["values"].size(), 35u);
  EXPECT_EQ(k["lower"].size(), 35u);
  EXPECT_EQ(k["error"].size(), 35u);
  auto timed = Json::parse(handle_query(idx, R"({"include_timing": true})").body);
  EXPECT_TRUE(timed["meta"]["elapsed_us"].is_number());
}

TEST(Api, ResultMatchesEngine) {
  const auto& idx = splom_index();
  QueryRequest q;
  q.group_by = {{"d0", BinStrategy::equi_width, 6, {}}};
  q.measure = MeasureKind::mean;
  q.measure_dim = "value";
  auto r = execute(idx, q);
  auto j = Json::parse(handle_query(idx, R"({"group_by": [{"dim": "d0", "bins": 6}],
                                             "measure": {"kind": "mean", "dim": "value"}})")
                           .body);
  ASSERT_EQ(j["values"].size(), r.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (r.values[i]) {
      EXPECT_EQ(j["values"][i].get<double>(), *r.values[i]);
    } else {
      EXPECT_TRUE(j["values"][i].is_null());
    }
  }
}

TEST(Api, SchemaDocument) {
  auto s = schema_document(splom_index());
  EXPECT_EQ(s["index_dimensions"].size(), 5u);
  for (const auto& d : s["dimensions"]) {
    EXPECT_TRUE(is_smooth_235(d["scale_count"].get<std::uint64_t>())) << d.dump();
  }
  auto w = schema_document(weekday_index());
  bool found = false;
  for (const auto& d : w["dimensions"]) {
    if (d["name"] == "weekday") {
      found = true;
      EXPECT_EQ(d["labels"].size(), 7u);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Api, StatsDocument) {
  const auto& idx = splom_index();
  auto s = stats_document(idx.stats);
  EXPECT_EQ(s.size(), 6u);
  EXPECT_GE(s["tree_height"].get<int>(), 1);
  EXPECT_EQ(s["subspaces"].get<std::size_t>(), idx.tree.leaves().size());
  auto path = (std::filesystem::temp_directory_path() / "ihcube_api_stats.idx").string();
  save_index(idx, path);
  const double file = static_cast<double>(std::filesystem::file_size(path));
  EXPECT_NEAR(s["storage_bytes"].get<double>(), file, 0.05 * file);
  std::filesystem::remove(path);
}

class ServerTest : public ::testing::Test {
 protected:
  void start() {
    port_ = server_.bind_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  QueryServer server_;
  std::thread thread_;
  int port_ = -1;
};

TEST_F(ServerTest, UnavailableUntilLoaded) {
  std::promise<void> go;
  auto gate = go.get_future().share();
  server_.load_async([gate] {
    gate.wait();
    return weekday_index();
  });
  start();
  auto c = client();
  for (const char* path : {"/schema", "/stats"}) {
    auto r = c.Get(path);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 503);
  }
  auto q = c.Post("/query", "{}", "application/json");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->status, 503);
  go.set_value();
  ASSERT_TRUE(server_.wait_until_ready());
  auto r = c.Get("/schema");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
}

TEST_F(ServerTest, FailedLoadReported) {
  server_.load_async([]() -> Index { throw FormatError("bad magic"); });
  start();
  EXPECT_FALSE(server_.wait_until_ready());
  auto r = client().Get("/stats");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 503);
  EXPECT_NE(r->body.find("bad magic"), std::string::npos);
}

TEST_F(ServerTest, Endpoints) {
  server_.set_index(splom_index());
  start();
  auto c = client();

  auto schema = c.Get("/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->status, 200);
  EXPECT_EQ(Json::parse(schema->body)["index_dimensions"].size(), 5u);

  auto stats = c.Get("/stats");
  ASSERT_TRUE(stats);
  auto s = Json::parse(stats->body);
  EXPECT_EQ(s["rows"], 5000);
  EXPECT_EQ(s["subspaces"].get<std::size_t>(), splom_index().tree.leaves().size());

  auto full = c.Post("/query", "{}", "application/json");
  ASSERT_TRUE(full);
  EXPECT_EQ(full->status, 200);
  EXPECT_EQ(Json::parse(full->body)["values"][0], 5000.0);
  EXPECT_TRUE(full->has_header("X-Query-Elapsed-Us"));

  auto bad = c.Post("/query", R"({"group_by": [{"dim": "d9"}]})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(Json::parse(bad->body)["error"]["field"], "group_by[0].dim");

  auto unsupported = c.Post(
      "/query", R"({"measure": {"kind": "median", "dim": "value"}, "want_error_bounds": true})",
      "application/json");
  ASSERT_TRUE(unsupported);
  EXPECT_EQ(unsupported->status, 422);
}

TEST_F(ServerTest, ConcurrentIdenticalRequests) {
  server_.set_index(splom_index());
  start();
  const std::string req =
      R"({"group_by": [{"dim": "d0", "bins": 20}, {"dim": "d3", "bins": 20}],
          "want_error_bounds": true, "align_scales": false})";
  std::vector<std::future<std::string>> futures;
  for (int t = 0; t < 4; ++t) {
    futures.push_back(std::async(std::launch::async, [&] {
      httplib::Client c("127.0.0.1", port_);
      std::string last;
      for (int i = 0; i < 5; ++i) {
        auto r = c.Post("/query", req, "application/json");
        if (!r || r->status != 200) return std::string("error");
        if (!last.empty() && last != r->body) return std::string("differs");
        last = r->body;
      }
      return last;
    }));
  }
  std::vector<std::string> bodies;
  for (auto& f : futures) bodies.push_back(f.get());
  for (const auto& b : bodies) EXPECT_EQ(b, bodies[0]);
  EXPECT_NE(bodies[0], "error");
}
