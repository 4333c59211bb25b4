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

#include "gridstream/result.hpp"

#include <algorithm>

#include <json.hpp>

namespace gridstream {

std::string_view to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::Range:
      return "range";
    case QueryKind::Knn:
      return "knn";
    case QueryKind::Join:
      return "join";
  }
  return "unknown";
}

std::optional<QueryKind> parse_query_kind(std::string_view name) {
  if (name == "range") return QueryKind::Range;
  if (name == "knn") return QueryKind::Knn;
  if (name == "join") return QueryKind::Join;
  return std::nullopt;
}

std::size_t QueryResultBatch::size() const {
  return std::visit([](const auto& v) { return v.size(); }, payload);
}

void canonicalize(QueryResultBatch& batch) {
  if (auto* pts = std::get_if<RangePayload>(&batch.payload)) {
    std::sort(pts->begin(), pts->end(), identity_less);
  } else if (auto* pairs = std::get_if<JoinPayload>(&batch.payload)) {
    std::sort(pairs->begin(), pairs->end(), pair_less);
  }
}

std::string to_json_line(const QueryResultBatch& batch) {
  using json = nlohmann::ordered_json;
  json payload = json::array();
  std::visit(
      [&](const auto& items) {
        using T = std::decay_t<decltype(items)>;
        for (const auto& item : items) {
          if constexpr (std::is_same_v<T, RangePayload>) {
            payload.push_back({{"id", item.object_id},
                               {"time", item.event_time},
                               {"x", item.x},
                               {"y", item.y}});
          } else if constexpr (std::is_same_v<T, KnnPayload>) {
            payload.push_back({{"id", item.point.object_id},
                               {"time", item.point.event_time},
                               {"distance", item.distance}});
          } else {
            payload.push_back(json::array({item.ordinary.object_id, item.query.object_id}));
          }
        }
      },
      batch.payload);

  json line = {{"window_start", batch.window_start},
               {"window_end", batch.window_end},
               {"type", to_string(batch.kind())},
               {"payload", std::move(payload)}};
  return line.dump();
}

namespace {

void hash_point(std::uint64_t& h, const SpatialPoint& p) {
  h = fnv1a64(p.object_id, h);
  h = fnv1a64(std::to_string(p.event_time), h);
  h = fnv1a64(std::to_string(p.x) + "," + std::to_string(p.y), h);
}

}  // namespace

std::uint64_t result_hash(const QueryResultBatch& batch) {
  std::uint64_t h = fnv1a64(std::to_string(batch.window_start) + ":" +
                            std::to_string(batch.window_end) + ":" +
                            std::string(to_string(batch.kind())));
  std::visit(
      [&](const auto& items) {
        using T = std::decay_t<decltype(items)>;
        for (const auto& item : items) {
          if constexpr (std::is_same_v<T, RangePayload>) {
            hash_point(h, item);
          } else if constexpr (std::is_same_v<T, KnnPayload>) {
            hash_point(h, item.point);
          } else {
            hash_point(h, item.ordinary);
            hash_point(h, item.query);
          }
        }
      },
      batch.payload);
  return h;
}

}  // namespace gridstream
