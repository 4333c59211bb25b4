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
#include <span>
#include <vector>

#include "gridstream/grid.hpp"
#include "gridstream/stream.hpp"

namespace gridstream {

enum class Metric : std::uint8_t {
  Euclidean,  // raw coordinate units
  Haversine,  // great-circle meters over (lon, lat) degrees
};

double euclidean(Location a, Location b);
double haversine_m(Location a, Location b);

inline double distance(Metric metric, Location a, Location b) {
  return metric == Metric::Euclidean ? euclidean(a, b) : haversine_m(a, b);
}

/// Layer rings for radius r under a metric. For Euclidean this is
/// layer_params(r, l). For Haversine, r (meters) is converted to degrees
/// conservatively over the grid's latitude span: the guaranteed ring uses the
/// largest meters-per-degree, the candidate ring the smallest.
LayerParams layer_params_for(const Grid& grid, double r, Metric metric);

/// Counts distance evaluations. One instance per single-threaded operator.
struct DistanceCounter {
  std::uint64_t count = 0;
};

/// Points within r of q, plus their distance.
struct Neighbor {
  SpatialPoint point;
  double distance = 0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending distance, ties by object id (then event time and coordinates).
bool neighbor_less(const Neighbor& a, const Neighbor& b);

struct JoinPair {
  SpatialPoint ordinary;  // from S1
  SpatialPoint query;     // from S2
  friend bool operator==(const JoinPair&, const JoinPair&) = default;
};

bool pair_less(const JoinPair& a, const JoinPair& b);

struct FilterOutput {
  std::vector<SpatialPoint> guaranteed;
  std::vector<SpatialPoint> candidate;
  std::uint64_t pruned = 0;
};

/// Splits points by the layer of their cell key. No distances are computed.
FilterOutput range_filter(std::span<const SpatialPoint> points,
                          const LayerSets& layers, const Grid& grid);

// `threads` > 1 runs the distance loop on the OpenMP kernels; output is
// identical to the serial path.

/// Guaranteed points pass through; candidates are distance-checked
/// (dist <= r).
std::vector<SpatialPoint> range_refine(std::span<const SpatialPoint> guaranteed,
                                       std::span<const SpatialPoint> candidate,
                                       Location q, double r, DistanceCounter& counter,
                                       Metric metric = Metric::Euclidean, int threads = 1);

std::vector<SpatialPoint> range_naive(std::span<const SpatialPoint> points, Location q,
                                      double r, DistanceCounter& counter,
                                      Metric metric = Metric::Euclidean, int threads = 1);

/// k nearest points within r, sorted by neighbor_less. Keeps a size-k
/// max-heap whose top is the current k-th nearest.
std::vector<Neighbor> knn_local(std::span<const SpatialPoint> points, Location q,
                                double r, std::size_t k, DistanceCounter& counter,
                                Metric metric = Metric::Euclidean, int threads = 1);

/// Merges sorted partial lists into the global k nearest.
std::vector<Neighbor> knn_merge(const std::vector<std::vector<Neighbor>>& partials,
                                std::size_t k);

struct Replica {
  CellKey key;
  Layer tag = Layer::Candidate;  // Guaranteed or Candidate
  SpatialPoint query;
};

/// One copy of q per guaranteed and candidate cell around q's cell.
std::vector<Replica> join_replicate(const SpatialPoint& q, const Grid& grid,
                                    LayerParams layers);
std::vector<Replica> join_replicate(const SpatialPoint& q, const Grid& grid, double r);

/// Joins the S1 points and S2 replicas that share one cell key. Guaranteed
/// replicas pair with every S1 point without a distance check.
std::vector<JoinPair> join_per_key(std::span<const SpatialPoint> s1,
                                   std::span<const Replica> replicas, double r,
                                   DistanceCounter& counter,
                                   Metric metric = Metric::Euclidean);

std::vector<JoinPair> join_naive(std::span<const SpatialPoint> s1,
                                 std::span<const SpatialPoint> s2, double r,
                                 DistanceCounter& counter,
                                 Metric metric = Metric::Euclidean, int threads = 1);

}  // namespace gridstream
