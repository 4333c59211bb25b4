/*
 * Copyright 2026 The gridstream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridstream/query.hpp"

namespace gridstream {

enum class QueryKind { Range, Knn, Join };

std::string_view to_string(QueryKind kind);
std::optional<QueryKind> parse_query_kind(std::string_view name);

using RangePayload = std::vector<SpatialPoint>;
using KnnPayload = std::vector<Neighbor>;
using JoinPayload = std::vector<JoinPair>;

/// One continuous-query output per fired window.
struct QueryResultBatch {
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::variant<RangePayload, KnnPayload, JoinPayload> payload;

  QueryKind kind() const { return static_cast<QueryKind>(payload.index()); }
  std::size_t size() const;
};

/// Sorts range points by identity and join pairs by (ordinary, query). kNN
/// lists are already ordered by distance with the id tie-break.
void canonicalize(QueryResultBatch& batch);

/// {"window_start", "window_end", "type", "payload"} on one line.
///   range: [{"id", "time", "x", "y"}, ...]
///   knn:   [{"id", "time", "distance"}, ...]
///   join:  [[ordinary_id, query_id], ...]
std::string to_json_line(const QueryResultBatch& batch);

/// FNV-1a over the window bounds and each result's identity (id, time,
/// coordinates); used to compare variants window by window.
std::uint64_t result_hash(const QueryResultBatch& batch);

}  // namespace gridstream
