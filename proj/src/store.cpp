#include "ihcube/store.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include "ihcube/config.hpp"
#include "ihcube/error.hpp"

namespace ihcube {

namespace {

constexpr char kMagic[4] = {'I', 'H', 'C', 'X'};

constexpr std::uint32_t tag(const char (&s)[5]) {
  return std::uint32_t(std::uint8_t(s[0])) | std::uint32_t(std::uint8_t(s[1])) << 8 |
         std::uint32_t(std::uint8_t(s[2])) << 16 | std::uint32_t(std::uint8_t(s[3])) << 24;
}
constexpr std::uint32_t kSchema = tag("SCHM");
constexpr std::uint32_t kStats = tag("STAT");
constexpr std::uint32_t kTree = tag("TREE");
constexpr std::uint32_t kTables = tag("IHST");
constexpr std::uint32_t kLsh = tag("LSHB");

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void bytes(std::string_view s) { buf_.append(s); }
  std::string& data() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(s_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(s_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(s_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view take(std::uint64_t n) {
    need(n);
    auto v = s_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  std::string str() { return std::string(take(u64())); }
  // Element count that must fit in the remaining bytes at `width` each.
  std::uint64_t count(std::size_t width) {
    auto n = u64();
    if (width > 0 && n > (s_.size() - pos_) / width) {
      throw FormatError("index file truncated");
    }
    return n;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > s_.size() - pos_) throw FormatError("index file truncated");
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::string_view s) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (!s.empty()) {
    auto n = static_cast<uInt>(std::min<std::size_t>(s.size(), 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(s.data()), n);
    s.remove_prefix(n);
  }
  return static_cast<std::uint32_t>(c);
}

void section(Writer& out, std::uint32_t t, Writer& body) {
  out.u32(t);
  out.u64(body.data().size());
  out.bytes(body.data());
  out.u32(crc(body.data()));
}

void write_rect(Writer& w, const Rect& r) {
  for (std::size_t d = 0; d < r.dims(); ++d) {
    w.f64(r[d].lo);
    w.f64(r[d].hi);
  }
}

Rect read_rect(Reader& r, std::size_t dims) {
  Rect out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    out[d].lo = r.f64();
    out[d].hi = r.f64();
  }
  return out;
}

std::string encode_schema(const Index& index) {
  Json j{{"schema", schema_to_json(index.schema)},
         {"layout",
          {{"kind", index.layout.kind == DescriptorKind::histogram ? "histogram"
                                                                   : "aggregate"},
           {"histogram_bins", index.layout.histogram_bins},
           {"histogram_measure", index.layout.histogram_measure},
           {"sum_slots", index.layout.sum_slots}}}};
  return j.dump();
}

}  // namespace

std::string serialize_index(const Index& index) {
  const std::size_t dims = index.axes.size();
  Writer out;
  out.bytes(std::string_view(kMagic, 4));
  out.u32(kIndexFormatVersion);
  out.u32(5);

  Writer schema;
  schema.str(encode_schema(index));
  section(out, kSchema, schema);

  Writer stats;
  const auto& s = index.stats;
  stats.u64(s.rows);
  stats.u64(s.storage_bytes);
  stats.f64(s.build_seconds);
  stats.u32(s.tree_height);
  stats.u64(s.subspaces);
  stats.u64(s.bins);
  stats.u64(s.skeleton_points);
  section(out, kStats, stats);

  Writer tree;
  const auto& nodes = index.tree.nodes();
  tree.u64(nodes.size());
  tree.u32(index.tree.root());
  for (const auto& n : nodes) {
    tree.u32(n.level);
    tree.u32(n.parent);
    tree.u32(n.leaf_index);
    tree.u64(n.count);
    write_rect(tree, n.mbr);
    tree.u64(n.children.size());
    for (auto c : n.children) tree.u32(c);
  }
  section(out, kTree, tree);

  Writer tables;
  tables.u64(index.ihs.size());
  for (const auto& ih : index.ihs) {
    for (const auto& e : ih.edges()) {
      tables.u64(e.size());
      for (auto v : e) tables.i64(v);
    }
    tables.f64(ih.hist_binning().lo);
    tables.f64(ih.hist_binning().hi);
    tables.u64(ih.hist_binning().bins);
    tables.u64(ih.raw_counts().size());
    for (auto v : ih.raw_counts()) tables.i64(v);
    tables.u64(ih.raw_sums().size());
    for (auto v : ih.raw_sums()) tables.f64(v);
  }
  section(out, kTables, tables);

  Writer lsh;
  const auto& p = index.lsh.params();
  const auto& fam = index.lsh.family();
  lsh.u32(p.projections);
  lsh.u32(p.tables);
  lsh.f64(p.bucket_width);
  lsh.u64(p.seed);
  lsh.u8(p.cover_segments ? 1 : 0);
  lsh.f64(fam.bucket_width);
  lsh.u64(fam.projections.size());
  for (std::size_t j = 0; j < fam.projections.size(); ++j) {
    for (std::size_t d = 0; d < dims; ++d) lsh.f64(fam.projections[j][d]);
    lsh.f64(fam.offsets[j]);
  }
  lsh.u64(index.lsh.leaf_count());
  lsh.u64(index.lsh.buckets().size());
  for (const auto& map : index.lsh.buckets()) {
    // Sorted keys keep the bytes independent of hash-map iteration order.
    std::map<std::int64_t, const std::vector<std::uint32_t>*> sorted;
    for (const auto& [k, v] : map) sorted.emplace(k, &v);
    lsh.u64(sorted.size());
    for (const auto& [k, v] : sorted) {
      lsh.i64(k);
      lsh.u64(v->size());
      for (auto id : *v) lsh.u32(id);
    }
  }
  section(out, kLsh, lsh);
  return std::move(out.data());
}

std::uint64_t serialized_size(const Index& index) {
  return serialize_index(index).size();
}

Index deserialize_index(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4) != std::string_view(kMagic, 4)) {
    throw FormatError("not an index file (bad magic)");
  }
  auto version = in.u32();
  if (version != kIndexFormatVersion) {
    throw FormatError("unsupported index version " + std::to_string(version));
  }
  auto sections = in.u32();
  std::map<std::uint32_t, std::string_view> body;
  for (std::uint32_t i = 0; i < sections; ++i) {
    auto t = in.u32();
    auto len = in.u64();
    auto payload = in.take(len);
    if (in.u32() != crc(payload)) throw FormatError("section checksum mismatch");
    body[t] = payload;
  }
  if (!in.done()) throw FormatError("trailing bytes after last section");
  for (auto t : {kSchema, kStats, kTree, kTables, kLsh}) {
    if (!body.count(t)) throw FormatError("missing index section");
  }

  Index index;
  {
    Reader r(body[kSchema]);
    Json j;
    try {
      j = Json::parse(r.str());
    } catch (const Json::exception&) {
      throw FormatError("schema section is not valid JSON");
    }
    try {
      index.schema = schema_from_json(j.at("schema"));
      const auto& l = j.at("layout");
      index.layout.kind = l.at("kind") == "histogram" ? DescriptorKind::histogram
                                                      : DescriptorKind::aggregate;
      index.layout.histogram_bins = l.at("histogram_bins");
      index.layout.histogram_measure = l.at("histogram_measure");
      index.layout.sum_slots = l.at("sum_slots");
    } catch (const Json::exception&) {
      throw FormatError("schema section is malformed");
    } catch (const SchemaError& e) {
      throw FormatError(std::string("schema section: ") + e.what());
    } catch (const ValidationError& e) {
      throw FormatError(std::string("schema section: ") + e.what());
    }
    index.axes = index.schema.index_axes();
  }
  const std::size_t dims = index.axes.size();
  {
    Reader r(body[kStats]);
    auto& s = index.stats;
    s.rows = r.u64();
    s.storage_bytes = r.u64();
    s.build_seconds = r.f64();
    s.tree_height = r.u32();
    s.subspaces = r.u64();
    s.bins = r.u64();
    s.skeleton_points = r.u64();
  }
  {
    Reader r(body[kTree]);
    auto n = r.count(12);
    auto root = r.u32();
    std::vector<TreeNode> nodes(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto& t = nodes[i];
      t.id = static_cast<std::uint32_t>(i);
      t.level = r.u32();
      t.parent = r.u32();
      t.leaf_index = r.u32();
      t.count = r.u64();
      t.mbr = read_rect(r, dims);
      auto c = r.count(4);
      for (std::uint64_t k = 0; k < c; ++k) {
        auto id = r.u32();
        if (id >= n) throw FormatError("child id out of range");
        t.children.push_back(id);
      }
      // Breadth-first numbering: parents precede children.
      if (t.parent != kNoNode && t.parent >= i) throw FormatError("parent out of range");
    }
    if (n > 0) {
      if (root >= n) throw FormatError("root out of range");
      index.tree = Tree(std::move(nodes), root);
    }
  }
  {
    Reader r(body[kTables]);
    auto n = r.count(8);
    if (n != index.tree.leaf_count()) throw FormatError("table count mismatch");
    for (std::uint64_t i = 0; i < n; ++i) {
      std::vector<std::vector<std::int64_t>> edges(dims);
      for (auto& e : edges) {
        auto m = r.count(8);
        for (std::uint64_t k = 0; k < m; ++k) e.push_back(r.i64());
      }
      LocalBinning b;
      b.lo = r.f64();
      b.hi = r.f64();
      b.bins = r.u64();
      std::vector<std::int64_t> counts(r.count(8));
      for (auto& v : counts) v = r.i64();
      std::vector<double> sums(r.count(8));
      for (auto& v : sums) v = r.f64();
      try {
        index.ihs.push_back(IntegralHistogram::from_raw(
            std::move(edges), index.layout, b, std::move(counts), std::move(sums)));
      } catch (const ConstructionError& e) {
        throw FormatError(std::string("integral histogram: ") + e.what());
      }
    }
  }
  {
    Reader r(body[kLsh]);
    LshParams p;
    p.projections = r.u32();
    p.tables = r.u32();
    p.bucket_width = r.f64();
    p.seed = r.u64();
    p.cover_segments = r.u8() != 0;
    LshFamily fam;
    fam.bucket_width = r.f64();
    auto np = r.count(8);
    for (std::uint64_t j = 0; j < np; ++j) {
      std::vector<double> a(dims);
      for (auto& x : a) x = r.f64();
      fam.projections.push_back(std::move(a));
      fam.offsets.push_back(r.f64());
    }
    auto leaves = r.u64();
    auto maps = r.count(8);
    std::vector<LshIndex::BucketMap> buckets(maps);
    for (auto& map : buckets) {
      auto keys = r.count(16);
      for (std::uint64_t k = 0; k < keys; ++k) {
        auto key = r.i64();
        auto& ids = map[key];
        auto m = r.count(4);
        for (std::uint64_t x = 0; x < m; ++x) {
          auto id = r.u32();
          if (id >= leaves) throw FormatError("LSH leaf id out of range");
          ids.push_back(id);
        }
      }
    }
    if (leaves != index.tree.leaf_count()) throw FormatError("LSH leaf count mismatch");
    index.lsh = LshIndex::from_parts(p, std::move(fam), leaves, std::move(buckets));
  }
  index.derive();
  return index;
}

void save_index(const Index& index, const std::string& path) {
  auto bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write to '" + path + "' failed");
}

Index load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_index(ss.str());
}

}  // namespace ihcube
