#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ihcube/config.hpp"
#include "ihcube/partitioner.hpp"

namespace ihcube {

/// Splits one CSV record. Quoted fields may hold commas, doubled quotes and
/// newlines; `line` must then contain the whole record.
std::vector<std::string> split_csv_record(std::string_view line);

/// Re-readable point stream over a CSV file with a header row. Rows with a
/// wrong field count, a non-numeric cell, an unknown label or a value
/// outside the domain are skipped and tallied.
class CsvSource : public PointSource {
 public:
  /// Throws IngestError when the file cannot be opened or a schema column
  /// is missing from the header.
  CsvSource(std::string path, Schema schema);

  /// Throws IngestError when a scan yields no valid rows.
  void scan(const std::function<void(const DataPoint&)>& fn) const override;

  /// Tallies of the most recent scan.
  std::uint64_t rows() const { return rows_; }
  std::uint64_t skipped() const { return skipped_; }

 private:
  std::string path_;
  Schema schema_;
  std::vector<std::size_t> field_of_column_;  // header position per schema column
  std::size_t header_fields_ = 0;
  mutable std::uint64_t rows_ = 0, skipped_ = 0;
};

/// Fills "auto" domains and labels from one pass over the file. Numeric
/// domains become [min, max] of the valid values (widened by one when they
/// coincide); labels are sorted. Returns `config` unchanged when nothing is
/// auto.
SchemaConfig resolve_config(const SchemaConfig& config, const std::string& path);

}  // namespace ihcube
