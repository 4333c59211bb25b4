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

// Data-parallel distance kernels. Every kernel has a serial reference and an
// OpenMP variant with identical output (same elements, same order); the
// serial one is what tests compare against.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gridstream/query.hpp"

namespace gridstream::kernels {

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;  // (s1 index, s2 index)

/// Ascending indices of points within r of q.
std::vector<std::uint32_t> radius_scan_serial(std::span<const SpatialPoint> points,
                                              Location q, double r, Metric metric);
std::vector<std::uint32_t> radius_scan_omp(std::span<const SpatialPoint> points,
                                           Location q, double r, Metric metric,
                                           int threads);

/// distances[i] = distance(points[i], q).
void distances_serial(std::span<const SpatialPoint> points, Location q, Metric metric,
                      std::span<double> distances);
void distances_omp(std::span<const SpatialPoint> points, Location q, Metric metric,
                   std::span<double> distances, int threads);

/// All (i, j) with dist(s1[i], s2[j]) <= r, ordered by j then i.
std::vector<IndexPair> pair_scan_serial(std::span<const SpatialPoint> s1,
                                        std::span<const SpatialPoint> s2, double r,
                                        Metric metric);
std::vector<IndexPair> pair_scan_omp(std::span<const SpatialPoint> s1,
                                     std::span<const SpatialPoint> s2, double r,
                                     Metric metric, int threads);

/// Dispatch helpers: threads <= 1 runs the serial kernel.
inline std::vector<std::uint32_t> radius_scan(std::span<const SpatialPoint> points,
                                              Location q, double r, Metric metric,
                                              int threads) {
  return threads > 1 ? radius_scan_omp(points, q, r, metric, threads)
                     : radius_scan_serial(points, q, r, metric);
}

inline std::vector<IndexPair> pair_scan(std::span<const SpatialPoint> s1,
                                        std::span<const SpatialPoint> s2, double r,
                                        Metric metric, int threads) {
  return threads > 1 ? pair_scan_omp(s1, s2, r, metric, threads)
                     : pair_scan_serial(s1, s2, r, metric);
}

int max_threads();

}  // namespace gridstream::kernels
