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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gridstream/runtime.hpp"
#include "oracle/oracle.hpp"

namespace testing_support {

namespace gs = gridstream;

/// n points uniform over [x0,x1]x[y0,y1] with times spread evenly over
/// [t0, t0 + span_ms) (non-decreasing). Ids cycle over `ids`.
inline std::vector<gs::SpatialPoint> uniform_points(std::mt19937_64& rng, std::size_t n,
                                                    double x0, double y0, double x1, double y1,
                                                    std::int64_t t0, std::int64_t span_ms,
                                                    std::size_t ids = 0,
                                                    const std::string& prefix = "") {
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  std::vector<gs::SpatialPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    gs::SpatialPoint p;
    p.object_id = prefix + std::to_string(ids ? i % ids : i);
    p.x = ux(rng);
    p.y = uy(rng);
    p.event_time = t0 + static_cast<std::int64_t>((static_cast<double>(i) / n) * span_ms);
    out.push_back(std::move(p));
  }
  return out;
}

inline gs::Grid grid_of(double x0, double y0, double x1, double y1, std::uint32_t m) {
  return gs::Grid::build(x0, y0, x1, y1, m);
}

/// Runs one query over in-memory sources and collects the batches.
inline std::vector<gs::QueryResultBatch> run(const gs::Grid& grid,
                                             const std::vector<gs::SpatialPoint>& s1,
                                             const std::vector<gs::SpatialPoint>* s2,
                                             const gs::QuerySpec& query,
                                             gs::PipelineConfig config = {},
                                             gs::RuntimeMetrics* metrics = nullptr) {
  std::vector<std::unique_ptr<gs::PointStream>> sources;
  sources.push_back(gs::memory_source(s1, grid));
  if (s2) sources.push_back(gs::memory_source(*s2, grid));
  std::vector<gs::QueryResultBatch> out;
  auto m = gs::run_pipeline(grid, std::move(sources), query, config,
                            [&](gs::QueryResultBatch&& b) { out.push_back(std::move(b)); });
  if (metrics) *metrics = std::move(m);
  return out;
}

inline oracle::Dist dist_of(gs::Metric m) {
  return m == gs::Metric::Euclidean ? oracle::Dist::Euclidean : oracle::Dist::Haversine;
}

// ---------------------------------------------------------------------------
// Comparisons against oracle output. Each returns an empty string on match,
// otherwise a short description of the first difference.

inline std::string describe(const gs::SpatialPoint& p) {
  return p.object_id + "@" + std::to_string(p.event_time) + "(" + std::to_string(p.x) + "," +
         std::to_string(p.y) + ")";
}

inline std::string same_points(const std::vector<gs::SpatialPoint>& got,
                               const std::vector<gs::SpatialPoint>& want) {
  if (got.size() != want.size()) {
    return "size " + std::to_string(got.size()) + " != " + std::to_string(want.size());
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!(got[i].object_id == want[i].object_id && got[i].event_time == want[i].event_time &&
          got[i].x == want[i].x && got[i].y == want[i].y)) {
      return "item " + std::to_string(i) + ": " + describe(got[i]) + " != " + describe(want[i]);
    }
  }
  return {};
}

/// Distances come from two independent formulas; haversine results may
/// differ in the last bits.
inline bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

inline std::string same_knn(const std::vector<gs::Neighbor>& got,
                            const std::vector<oracle::Ranked>& want) {
  if (got.size() != want.size()) {
    return "size " + std::to_string(got.size()) + " != " + std::to_string(want.size());
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto& a = got[i].point;
    const auto& b = want[i].point;
    if (!(a.object_id == b.object_id && a.event_time == b.event_time && a.x == b.x &&
          a.y == b.y && close(got[i].distance, want[i].distance))) {
      return "rank " + std::to_string(i) + ": " + describe(a) + " != " + describe(b);
    }
  }
  return {};
}

inline std::string same_pairs(const std::vector<gs::JoinPair>& got,
                              const std::vector<oracle::Pair>& want) {
  if (got.size() != want.size()) {
    return "size " + std::to_string(got.size()) + " != " + std::to_string(want.size());
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!(got[i].ordinary.object_id == want[i].s1.object_id &&
          got[i].ordinary.event_time == want[i].s1.event_time &&
          got[i].ordinary.x == want[i].s1.x && got[i].ordinary.y == want[i].s1.y &&
          got[i].query.object_id == want[i].s2.object_id &&
          got[i].query.event_time == want[i].s2.event_time && got[i].query.x == want[i].s2.x &&
          got[i].query.y == want[i].s2.y)) {
      return "pair " + std::to_string(i) + ": " + describe(got[i].ordinary) + "~" +
             describe(got[i].query);
    }
  }
  return {};
}

struct Verdict {
  std::size_t windows = 0;
  std::size_t mismatches = 0;
  std::string first_problem;

  void note(std::int64_t start, const std::string& problem) {
    ++windows;
    if (problem.empty()) return;
    if (mismatches++ == 0) first_problem = "window " + std::to_string(start) + ": " + problem;
  }
};

/// Window-by-window comparison of pipeline batches with the oracle, which
/// sees only the points that survive the lateness filter.
inline Verdict check_range(const std::vector<gs::QueryResultBatch>& batches,
                           const std::vector<gs::SpatialPoint>& points,
                           const gs::QuerySpec& query) {
  Verdict v;
  const auto kept = oracle::drop_late(points, query.window.lateness_ms);
  const auto windows = oracle::windows(kept, query.window.size_ms, query.window.slide_ms);
  if (windows.size() != batches.size()) {
    v.note(0, "window count " + std::to_string(batches.size()) + " != " +
                  std::to_string(windows.size()));
    return v;
  }
  std::size_t i = 0;
  for (const auto& [start, members] : windows) {
    const auto& b = batches[i++];
    if (b.window_start != start) {
      v.note(start, "batch starts at " + std::to_string(b.window_start));
      continue;
    }
    v.note(start, same_points(std::get<gs::RangePayload>(b.payload),
                              oracle::range(members, query.q.x, query.q.y, query.r,
                                            dist_of(query.metric))));
  }
  return v;
}

inline Verdict check_knn(const std::vector<gs::QueryResultBatch>& batches,
                         const std::vector<gs::SpatialPoint>& points, const gs::QuerySpec& query) {
  Verdict v;
  const auto kept = oracle::drop_late(points, query.window.lateness_ms);
  const auto windows = oracle::windows(kept, query.window.size_ms, query.window.slide_ms);
  if (windows.size() != batches.size()) {
    v.note(0, "window count " + std::to_string(batches.size()) + " != " +
                  std::to_string(windows.size()));
    return v;
  }
  std::size_t i = 0;
  for (const auto& [start, members] : windows) {
    const auto& b = batches[i++];
    if (b.window_start != start) {
      v.note(start, "batch starts at " + std::to_string(b.window_start));
      continue;
    }
    v.note(start, same_knn(std::get<gs::KnnPayload>(b.payload),
                           oracle::knn(members, query.q.x, query.q.y, query.r, query.k,
                                       dist_of(query.metric))));
  }
  return v;
}

inline Verdict check_join(const std::vector<gs::QueryResultBatch>& batches,
                          const std::vector<gs::SpatialPoint>& s1,
                          const std::vector<gs::SpatialPoint>& s2, const gs::QuerySpec& query) {
  Verdict v;
  const auto k1 = oracle::drop_late(s1, query.window.lateness_ms);
  const auto k2 = oracle::drop_late(s2, query.window.lateness_ms);
  const auto windows = oracle::join_windows(k1, k2, query.window.size_ms, query.window.slide_ms);
  if (windows.size() != batches.size()) {
    v.note(0, "window count " + std::to_string(batches.size()) + " != " +
                  std::to_string(windows.size()));
    return v;
  }
  std::size_t i = 0;
  for (const auto& [start, w] : windows) {
    const auto& b = batches[i++];
    if (b.window_start != start) {
      v.note(start, "batch starts at " + std::to_string(b.window_start));
      continue;
    }
    v.note(start, same_pairs(std::get<gs::JoinPayload>(b.payload),
                             oracle::join(w.s1, w.s2, query.r, dist_of(query.metric))));
  }
  return v;
}

/// One JSON line per batch; used for byte-level comparisons across runs.
inline std::vector<std::string> lines(const std::vector<gs::QueryResultBatch>& batches) {
  std::vector<std::string> out;
  for (const auto& b : batches) out.push_back(gs::to_json_line(b));
  return out;
}

}  // namespace testing_support
