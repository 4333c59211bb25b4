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

#include "gridstream/query.hpp"

#include "gridstream/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

namespace gridstream {

namespace {

constexpr double kEarthRadiusM = 6371008.8;
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMetersPerDegree = kEarthRadiusM * kDegToRad;
// Slack on the degree conversion: covers the gap between the local flat
// approximation and the great-circle distance across a grid-sized span.
constexpr double kHaversineSlack = 0.02;

}  // namespace

double euclidean(Location a, Location b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

double haversine_m(Location a, Location b) {
  const double lat1 = a.y * kDegToRad;
  const double lat2 = b.y * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.x - a.x) * kDegToRad;
  const double s = std::sin(dlat / 2);
  const double t = std::sin(dlon / 2);
  const double h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

LayerParams layer_params_for(const Grid& grid, double r, Metric metric) {
  if (metric == Metric::Euclidean) return layer_params(r, grid.cell_len());
  if (!(r > 0)) throw GridError("radius must be > 0");

  const double max_abs_lat =
      std::max(std::abs(grid.min_y()), std::abs(grid.max_y()));
  if (max_abs_lat >= 89.0) {
    throw GridError("haversine layers need a grid below 89 degrees latitude");
  }
  const double widest = kMetersPerDegree * (1 + kHaversineSlack);
  const double narrowest =
      kMetersPerDegree * std::cos(max_abs_lat * kDegToRad) * (1 - kHaversineSlack);

  LayerParams p;
  p.guaranteed = layer_params(r / widest, grid.cell_len()).guaranteed;
  p.candidate = layer_params(r / narrowest, grid.cell_len()).candidate;
  return p;
}

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return std::tie(a.distance, a.point.object_id, a.point.event_time, a.point.x, a.point.y) <
         std::tie(b.distance, b.point.object_id, b.point.event_time, b.point.x, b.point.y);
}

bool pair_less(const JoinPair& a, const JoinPair& b) {
  if (identity_less(a.ordinary, b.ordinary)) return true;
  if (identity_less(b.ordinary, a.ordinary)) return false;
  return identity_less(a.query, b.query);
}

FilterOutput range_filter(std::span<const SpatialPoint> points, const LayerSets& layers,
                          const Grid& grid) {
  FilterOutput out;
  for (const auto& p : points) {
    switch (layers.classify(grid.decode(p.cell))) {
      case Layer::Guaranteed:
        out.guaranteed.push_back(p);
        break;
      case Layer::Candidate:
        out.candidate.push_back(p);
        break;
      case Layer::Pruned:
        ++out.pruned;
        break;
    }
  }
  return out;
}

std::vector<SpatialPoint> range_refine(std::span<const SpatialPoint> guaranteed,
                                       std::span<const SpatialPoint> candidate,
                                       Location q, double r, DistanceCounter& counter,
                                       Metric metric, int threads) {
  std::vector<SpatialPoint> out(guaranteed.begin(), guaranteed.end());
  counter.count += candidate.size();
  for (auto i : kernels::radius_scan(candidate, q, r, metric, threads)) {
    out.push_back(candidate[i]);
  }
  return out;
}

std::vector<SpatialPoint> range_naive(std::span<const SpatialPoint> points, Location q,
                                      double r, DistanceCounter& counter, Metric metric,
                                      int threads) {
  std::vector<SpatialPoint> out;
  counter.count += points.size();
  for (auto i : kernels::radius_scan(points, q, r, metric, threads)) {
    out.push_back(points[i]);
  }
  return out;
}

std::vector<Neighbor> knn_local(std::span<const SpatialPoint> points, Location q,
                                double r, std::size_t k, DistanceCounter& counter,
                                Metric metric, int threads) {
  if (k == 0) return {};
  std::vector<double> dist(points.size());
  if (threads > 1) {
    kernels::distances_omp(points, q, metric, dist, threads);
  } else {
    kernels::distances_serial(points, q, metric, dist);
  }
  counter.count += points.size();

  auto worse = [](const Neighbor& a, const Neighbor& b) { return neighbor_less(a, b); };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> heap(worse);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const SpatialPoint& p = points[i];
    const double d = dist[i];
    if (d > r) continue;
    if (heap.size() < k) {
      heap.push({p, d});
      continue;
    }
    const Neighbor& kth = heap.top();
    if (d > kth.distance) continue;
    Neighbor cand{p, d};
    if (neighbor_less(cand, kth)) {
      heap.pop();
      heap.push(std::move(cand));
    }
  }

  std::vector<Neighbor> out(heap.size());
  for (auto i = out.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

std::vector<Neighbor> knn_merge(const std::vector<std::vector<Neighbor>>& partials,
                                std::size_t k) {
  // k-way merge over the sorted partials.
  using Cursor = std::pair<std::size_t, std::size_t>;  // (list, position)
  auto after = [&](const Cursor& a, const Cursor& b) {
    return neighbor_less(partials[b.first][b.second], partials[a.first][a.second]);
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(after)> frontier(after);
  for (std::size_t i = 0; i < partials.size(); ++i) {
    if (!partials[i].empty()) frontier.push({i, 0});
  }
  std::vector<Neighbor> out;
  while (out.size() < k && !frontier.empty()) {
    auto [list, pos] = frontier.top();
    frontier.pop();
    out.push_back(partials[list][pos]);
    if (pos + 1 < partials[list].size()) frontier.push({list, pos + 1});
  }
  return out;
}

std::vector<Replica> join_replicate(const SpatialPoint& q, const Grid& grid,
                                    LayerParams layers) {
  const LayerSets sets = layer_sets(grid, grid.cell_of(q.x, q.y), layers);
  std::vector<Replica> out;
  out.reserve(sets.guaranteed.size() + sets.candidate.size());
  for (auto c : sets.guaranteed) out.push_back({grid.encode(c), Layer::Guaranteed, q});
  for (auto c : sets.candidate) out.push_back({grid.encode(c), Layer::Candidate, q});
  return out;
}

std::vector<Replica> join_replicate(const SpatialPoint& q, const Grid& grid, double r) {
  return join_replicate(q, grid, layer_params(r, grid.cell_len()));
}

std::vector<JoinPair> join_per_key(std::span<const SpatialPoint> s1,
                                   std::span<const Replica> replicas, double r,
                                   DistanceCounter& counter, Metric metric) {
  std::vector<JoinPair> out;
  for (const auto& rep : replicas) {
    if (rep.tag == Layer::Guaranteed) {
      for (const auto& p : s1) out.push_back({p, rep.query});
      continue;
    }
    const Location q = rep.query.location();
    for (const auto& p : s1) {
      ++counter.count;
      if (distance(metric, p.location(), q) <= r) out.push_back({p, rep.query});
    }
  }
  return out;
}

std::vector<JoinPair> join_naive(std::span<const SpatialPoint> s1,
                                 std::span<const SpatialPoint> s2, double r,
                                 DistanceCounter& counter, Metric metric, int threads) {
  std::vector<JoinPair> out;
  counter.count += s1.size() * s2.size();
  for (auto [i, j] : kernels::pair_scan(s1, s2, r, metric, threads)) {
    out.push_back({s1[i], s2[j]});
  }
  return out;
}

}  // namespace gridstream
