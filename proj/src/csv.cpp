#include "ihcube/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "ihcube/error.hpp"

namespace ihcube {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_real(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && end == s.data() + s.size() && std::isfinite(out);
}

// Reads whole records, joining physical lines while a quote is open.
class RecordReader {
 public:
  explicit RecordReader(const std::string& path) : in_(path) {
    if (!in_) throw IngestError("cannot open '" + path + "'");
  }

  bool next(std::string& record) {
    record.clear();
    std::string line;
    bool open = false;
    bool any = false;
    while (std::getline(in_, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (any) record += '\n';
      record += line;
      any = true;
      open ^= (std::count(line.begin(), line.end(), '"') % 2) == 1;
      if (!open) return true;
    }
    return any;
  }

 private:
  std::ifstream in_;
};

std::vector<std::string> read_header(RecordReader& reader, const std::string& path) {
  std::string rec;
  if (!reader.next(rec)) throw IngestError("'" + path + "' has no header row");
  auto fields = split_csv_record(rec);
  for (auto& f : fields) f = std::string(trim(f));
  // A UTF-8 byte order mark would otherwise stick to the first name.
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  return fields;
}

std::size_t header_position(const std::vector<std::string>& header,
                            const std::string& name, const std::string& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw IngestError("'" + path + "' has no column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool is_blank(const std::string& rec) {
  return std::all_of(rec.begin(), rec.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          out.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

CsvSource::CsvSource(std::string path, Schema schema)
    : path_(std::move(path)), schema_(std::move(schema)) {
  RecordReader reader(path_);
  auto header = read_header(reader, path_);
  header_fields_ = header.size();
  for (const auto& d : schema_.dimensions()) {
    field_of_column_.push_back(header_position(header, d.name, path_));
  }
}

void CsvSource::scan(const std::function<void(const DataPoint&)>& fn) const {
  const auto& dims = schema_.dimensions();
  std::vector<std::unordered_map<std::string, double>> codes(dims.size());
  for (std::size_t c = 0; c < dims.size(); ++c) {
    const auto& labels = dims[c].category_labels;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      codes[c].emplace(labels[k], static_cast<double>(k));
    }
  }

  RecordReader reader(path_);
  read_header(reader, path_);
  rows_ = skipped_ = 0;
  std::string rec;
  std::vector<double> value(dims.size());
  DataPoint p;
  p.coordinates.resize(schema_.index_count());
  p.measures.resize(schema_.measure_count());
  while (reader.next(rec)) {
    if (is_blank(rec)) continue;
    auto fields = split_csv_record(rec);
    bool ok = fields.size() == header_fields_;
    for (std::size_t c = 0; ok && c < dims.size(); ++c) {
      const auto& f = fields[field_of_column_[c]];
      if (dims[c].kind == DimensionKind::categorical) {
        auto it = codes[c].find(std::string(trim(f)));
        ok = it != codes[c].end();
        if (ok) value[c] = it->second;
      } else {
        ok = parse_real(f, value[c]) && dims[c].contains(value[c]);
      }
    }
    if (!ok) {
      ++skipped_;
      continue;
    }
    for (std::size_t i = 0; i < p.coordinates.size(); ++i) {
      p.coordinates[i] = value[schema_.index_columns()[i]];
    }
    for (std::size_t i = 0; i < p.measures.size(); ++i) {
      p.measures[i] = value[schema_.measure_columns()[i]];
    }
    ++rows_;
    fn(p);
  }
  if (rows_ == 0) {
    throw IngestError("'" + path_ + "' has no valid rows (" +
                      std::to_string(skipped_) + " skipped)");
  }
}

SchemaConfig resolve_config(const SchemaConfig& config, const std::string& path) {
  if (!config.needs_scan()) return config;
  SchemaConfig out = config;
  auto& dims = out.dimensions;

  RecordReader reader(path);
  auto header = read_header(reader, path);
  std::vector<std::size_t> field(dims.size());
  for (std::size_t c = 0; c < dims.size(); ++c) {
    field[c] = header_position(header, dims[c].name, path);
  }

  std::vector<double> lo(dims.size(), INFINITY), hi(dims.size(), -INFINITY);
  std::vector<std::set<std::string>> labels(dims.size());
  std::vector<double> value(dims.size());
  std::vector<std::string> label(dims.size());
  std::uint64_t valid = 0;
  std::string rec;
  while (reader.next(rec)) {
    if (is_blank(rec)) continue;
    auto fields = split_csv_record(rec);
    bool ok = fields.size() == header.size();
    for (std::size_t c = 0; ok && c < dims.size(); ++c) {
      const auto& d = dims[c];
      const auto& f = fields[field[c]];
      if (d.kind == DimensionKind::categorical) {
        label[c] = std::string(trim(f));
        ok = d.labels.empty()
                 ? !label[c].empty()
                 : std::find(d.labels.begin(), d.labels.end(), label[c]) != d.labels.end();
      } else {
        ok = parse_real(f, value[c]) &&
             (!d.domain_min || (value[c] >= *d.domain_min && value[c] <= *d.domain_max));
      }
    }
    if (!ok) continue;
    ++valid;
    for (std::size_t c = 0; c < dims.size(); ++c) {
      if (!dims[c].needs_scan()) continue;
      if (dims[c].kind == DimensionKind::categorical) {
        labels[c].insert(label[c]);
      } else {
        lo[c] = std::min(lo[c], value[c]);
        hi[c] = std::max(hi[c], value[c]);
      }
    }
  }
  if (valid == 0) throw IngestError("'" + path + "' has no valid rows");

  for (std::size_t c = 0; c < dims.size(); ++c) {
    auto& d = dims[c];
    if (!d.needs_scan()) continue;
    if (d.kind == DimensionKind::categorical) {
      d.labels.assign(labels[c].begin(), labels[c].end());
    } else {
      d.domain_min = lo[c];
      d.domain_max = hi[c] > lo[c] ? hi[c] : lo[c] + 1.0;
    }
  }
  return out;
}

}  // namespace ihcube
