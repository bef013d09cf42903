#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ihcube/config.hpp"
#include "ihcube/error.hpp"
#include "ihcube/partitioner.hpp"
#include "ihcube/store.hpp"

using namespace ihcube;

namespace {

Schema schema3() {
  return Schema({DimensionSpec::numeric("x", 0.0, 100.0, 100),
                 DimensionSpec::numeric("y", 0.0, 50.0, 60),
                 DimensionSpec::numeric("v", 0.0, 10.0, 10, DimensionRole::measure)});
}

std::vector<DataPoint> clustered(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DataPoint> pts(n);
  for (auto& p : pts) {
    bool c = u(rng) < 0.7;
    double x = c ? 30 + 5 * g(rng) : 100 * u(rng);
    double y = c ? 20 + 3 * g(rng) : 50 * u(rng);
    p.coordinates = {std::clamp(x, 0.0, 100.0), std::clamp(y, 0.0, 50.0)};
    p.measures = {10 * u(rng)};
  }
  return pts;
}

BuildConfig small_config(const Schema& s) {
  BuildConfig c;
  c.tree.m_max = 16;
  c.layout = DescriptorLayout::aggregate(static_cast<std::uint32_t>(s.measure_count()));
  return c;
}

// Serialized form without the wall-clock build time.
std::string fingerprint(Index idx) {
  idx.stats.build_seconds = 0.0;
  return serialize_index(idx);
}

std::uint64_t leaf_total(const Index& idx) {
  std::uint64_t n = 0;
  for (const auto& ih : idx.ihs) n += static_cast<std::uint64_t>(ih.total().count());
  return n;
}

}  // namespace

TEST(Build, EmptyInput) {
  auto s = schema3();
  std::vector<DataPoint> none;
  auto idx = build_index(s, VectorSource(none), small_config(s));
  EXPECT_EQ(idx.stats.subspaces, 0u);
  EXPECT_EQ(idx.stats.rows, 0u);
  EXPECT_EQ(idx.total_count(), 0u);
  EXPECT_TRUE(idx.tree.empty());
}

TEST(Build, ConservesRows) {
  auto s = schema3();
  auto pts = clustered(20000, 1);
  auto cfg = small_config(s);
  cfg.sample_rate = 0.1;
  auto idx = build_index(s, VectorSource(pts), cfg);
  EXPECT_EQ(leaf_total(idx), pts.size());
  EXPECT_EQ(idx.total_count(), pts.size());
  EXPECT_EQ(idx.stats.rows, pts.size());
  std::uint64_t by_count = 0;
  for (auto id : idx.tree.leaves()) by_count += idx.tree.node(id).count;
  EXPECT_EQ(by_count, pts.size());
  EXPECT_LT(idx.stats.skeleton_points, pts.size());
  EXPECT_GE(idx.stats.tree_height, 1u);
  EXPECT_EQ(idx.stats.subspaces, idx.tree.leaf_count());
  // Each leaf's MBR contains its IH's points, and the tree covers every row.
  auto scale = scale_factors(idx.axes);
  for (const auto& p : pts) {
    EXPECT_NE(assign_leaf(idx.tree, scale, p.coordinates), kNoNode);
  }
  // Node totals aggregate children.
  for (const auto& n : idx.tree.nodes()) {
    if (n.is_leaf()) continue;
    FeatureDescriptor sum(idx.layout);
    for (auto c : n.children) sum += idx.node_totals[c];
    EXPECT_EQ(sum.count(), idx.node_totals[n.id].count());
    EXPECT_NEAR(sum.sums()[0], idx.node_totals[n.id].sums()[0], 1e-9 * sum.sums()[0]);
  }
}

TEST(Build, FullRateMatchesExactInsertion) {
  auto s = schema3();
  auto pts = clustered(3000, 2);
  auto cfg = small_config(s);
  cfg.sample_rate = 1.0;
  cfg.max_sample = 0;
  auto idx = build_index(s, VectorSource(pts), cfg);
  RTreeBuilder b(s.index_axes(), cfg.tree);
  for (const auto& p : pts) b.insert(p.coordinates);
  auto exact = b.freeze();
  ASSERT_EQ(idx.tree.nodes().size(), exact.nodes().size());
  for (std::size_t i = 0; i < exact.nodes().size(); ++i) {
    EXPECT_EQ(idx.tree.nodes()[i].mbr, exact.nodes()[i].mbr);
    EXPECT_EQ(idx.tree.nodes()[i].children, exact.nodes()[i].children);
  }
  EXPECT_EQ(idx.stats.skeleton_points, pts.size());
}

TEST(Build, Deterministic) {
  auto s = schema3();
  auto pts = clustered(8000, 3);
  auto cfg = small_config(s);
  cfg.sample_rate = 0.2;
  auto a = build_index(s, VectorSource(pts), cfg);
  auto b = build_index(s, VectorSource(pts), cfg);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
}

TEST(Build, SerialAndParallelAgree) {
  auto s = schema3();
  auto pts = clustered(5000, 4);
  auto cfg = small_config(s);
  cfg.parallel = false;
  auto a = build_index(s, VectorSource(pts), cfg);
  cfg.parallel = true;
  auto b = build_index(s, VectorSource(pts), cfg);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
}

TEST(Build, RejectsOutOfDomainRows) {
  auto s = schema3();
  std::vector<DataPoint> pts{{{10.0, 60.0}, {1.0}}};
  EXPECT_THROW(build_index(s, VectorSource(pts), small_config(s)), ConstructionError);
}

TEST(Build, TinySampleStillBuilds) {
  auto s = schema3();
  auto pts = clustered(5, 5);
  auto cfg = small_config(s);
  cfg.sample_rate = 1e-6;
  auto idx = build_index(s, VectorSource(pts), cfg);
  EXPECT_EQ(idx.total_count(), 5u);
}

TEST(Build, HistogramLayout) {
  auto s = schema3();
  auto pts = clustered(4000, 6);
  auto cfg = small_config(s);
  cfg.layout = DescriptorLayout::histogram(8, 0, 1);
  auto idx = build_index(s, VectorSource(pts), cfg);
  EXPECT_EQ(leaf_total(idx), pts.size());
  for (const auto& ih : idx.ihs) {
    auto t = ih.total();
    std::int64_t mass = 0;
    for (auto m : t.histogram()) mass += m;
    EXPECT_EQ(mass, t.count());
  }
}

TEST(Build, StoragePlateausWithSampleCap) {
  auto s = schema3();
  auto cfg = small_config(s);
  cfg.sample_rate = 0.5;
  cfg.max_sample = 2000;
  auto small = clustered(10000, 7), large = clustered(40000, 7);
  auto a = build_index(s, VectorSource(small), cfg);
  auto b = build_index(s, VectorSource(large), cfg);
  double ratio = double(b.stats.storage_bytes) / double(a.stats.storage_bytes);
  EXPECT_NEAR(ratio, 1.0, 0.1);
}

TEST(Store, RoundTrip) {
  auto s = schema3();
  auto pts = clustered(6000, 8);
  auto cfg = small_config(s);
  cfg.layout = DescriptorLayout::histogram(4, 0, 1);
  auto idx = build_index(s, VectorSource(pts), cfg);
  auto bytes = serialize_index(idx);
  EXPECT_EQ(bytes.size(), idx.stats.storage_bytes);
  auto back = deserialize_index(bytes);
  EXPECT_EQ(serialize_index(back), bytes);
  EXPECT_EQ(back.stats, idx.stats);
  EXPECT_EQ(back.node_totals, idx.node_totals);
  EXPECT_EQ(back.tree.leaves(), idx.tree.leaves());
  Rect full(2);
  full[0] = {0, 100};
  full[1] = {0, 50};
  EXPECT_EQ(back.lsh.candidates(back.axes, full), idx.lsh.candidates(idx.axes, full));
}

TEST(Store, EmptyIndexRoundTrips) {
  auto s = schema3();
  std::vector<DataPoint> none;
  auto idx = build_index(s, VectorSource(none), small_config(s));
  auto back = deserialize_index(serialize_index(idx));
  EXPECT_EQ(back.stats.subspaces, 0u);
  EXPECT_EQ(serialize_index(back), serialize_index(idx));
}

TEST(Store, CorruptionFailsClosed) {
  auto s = schema3();
  auto pts = clustered(2000, 9);
  auto bytes = serialize_index(build_index(s, VectorSource(pts), small_config(s)));
  std::mt19937_64 rng(10);
  for (int i = 0; i < 200; ++i) {
    auto bad = bytes;
    bad[rng() % bad.size()] ^= static_cast<char>(1 + rng() % 255);
    EXPECT_THROW(deserialize_index(bad), FormatError);
  }
  EXPECT_THROW(deserialize_index(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(deserialize_index(bytes + "x"), FormatError);
  auto wrong_version = bytes;
  wrong_version[4] = 9;
  EXPECT_THROW(deserialize_index(wrong_version), FormatError);
  EXPECT_THROW(deserialize_index(""), FormatError);
}

TEST(Store, FileRoundTrip) {
  auto s = schema3();
  auto pts = clustered(1000, 11);
  auto idx = build_index(s, VectorSource(pts), small_config(s));
  auto path = (std::filesystem::temp_directory_path() / "ihcube_store_test.ihx").string();
  save_index(idx, path);
  EXPECT_EQ(std::filesystem::file_size(path), idx.stats.storage_bytes);
  auto back = load_index(path);
  EXPECT_EQ(serialize_index(back), serialize_index(idx));
  std::filesystem::remove(path);
  EXPECT_THROW(load_index(path), FormatError);
}

TEST(Config, ParsesAndRejectsUnknownFields) {
  auto j = Json::parse(R"({
    "dimensions": [
      {"name": "t", "kind": "numeric", "domain": [0, 3571], "resolution": 1},
      {"name": "day", "kind": "categorical", "labels": ["Mon","Tue","Wed","Thu","Fri","Sat","Sun"]},
      {"name": "fare", "role": "measure", "domain": [0, 100]}
    ],
    "build": {"m_max": 32, "sample_rate": 0.5},
    "lsh": {"tables": 4},
    "descriptor": {"kind": "histogram", "bins": 12, "measure": "fare"}
  })");
  auto c = parse_config(j);
  auto s = c.schema();
  EXPECT_EQ(s.index_count(), 2u);
  EXPECT_EQ(s.index_dim(0).scale_count, 3600u);
  EXPECT_DOUBLE_EQ(s.index_dim(0).domain_max, 3600.0);
  EXPECT_EQ(s.index_dim(1).category_labels.size(), 7u);
  EXPECT_EQ(s.measure_dim(0).scale_count, kDefaultAutoScales);
  auto b = c.build_config(s);
  EXPECT_EQ(b.tree.m_max, 32u);
  EXPECT_EQ(b.lsh.tables, 4u);
  EXPECT_EQ(b.layout, DescriptorLayout::histogram(12, 0, 1));
  // Round trip through JSON.
  auto again = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));

  auto bad = j;
  bad["build"]["typo"] = 1;
  try {
    parse_config(bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "build.typo");
  }
  bad = j;
  bad["dimensions"][0]["kind"] = "weird";
  try {
    parse_config(bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "dimensions[0].kind");
  }
}

TEST(Config, AutoFieldsNeedScan) {
  auto c = parse_config(Json::parse(R"({"dimensions": [{"name": "x", "domain": "auto"}]})"));
  EXPECT_TRUE(c.needs_scan());
  EXPECT_THROW(c.schema(), SchemaError);
}

TEST(Config, SchemaJsonRoundTrip) {
  Schema s({DimensionSpec::numeric("x", -1.0, 2.0, 90),
            DimensionSpec::categorical("c", {"a", "b"}, DimensionRole::both)});
  auto back = schema_from_json(schema_to_json(s));
  EXPECT_EQ(schema_to_json(back), schema_to_json(s));
  EXPECT_EQ(back.index_count(), 2u);
  EXPECT_EQ(back.measure_count(), 1u);
}
