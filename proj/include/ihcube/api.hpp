#pragma once

#include <string>

#include "ihcube/config.hpp"
#include "ihcube/index.hpp"
#include "ihcube/query.hpp"

namespace ihcube {

struct ApiQuery {
  QueryRequest request;
  /// Adds meta.elapsed_us to the body, which then differs between runs.
  bool include_timing = false;
};

/// Strict parse of a /query body. Unknown keys and wrong types throw
/// ValidationError with a JSON path such as "group_by[1].bins".
ApiQuery parse_api_query(const Json& body);

/// Flat row-major arrays plus shape; empty cells are null. Bounds arrays
/// appear only when requested.
Json result_to_json(const QueryResult& result, bool include_timing = false);

Json schema_document(const Index& index);

/// rows, tree_height, subspaces, bins, storage_bytes, build_seconds.
Json stats_document(const BuildStats& stats);

struct ApiResponse {
  int status = 200;
  std::string body;
  double elapsed_us = 0.0;
};

/// Parses, plans and executes one request. Maps ValidationError to 400 and
/// UnsupportedError to 422, each with {"error": {...}} naming the field.
ApiResponse handle_query(const Index& index, const std::string& body,
                         const ExecOptions& options = {});

Json error_document(int status, const std::string& field, const std::string& message);

}  // namespace ihcube
