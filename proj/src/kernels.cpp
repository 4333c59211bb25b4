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

#include "gridstream/kernels.hpp"

#include <omp.h>

namespace gridstream::kernels {

namespace {

struct Chunk {
  std::size_t begin;
  std::size_t end;
};

Chunk chunk_of(std::size_t n, int tid, int nt) {
  return {n * static_cast<std::size_t>(tid) / static_cast<std::size_t>(nt),
          n * static_cast<std::size_t>(tid + 1) / static_cast<std::size_t>(nt)};
}

template <class T>
std::vector<T> concat(std::vector<std::vector<T>>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<T> out;
  out.reserve(total);
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

std::vector<std::uint32_t> radius_scan_serial(std::span<const SpatialPoint> points,
                                              Location q, double r, Metric metric) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (distance(metric, points[i].location(), q) <= r) {
      out.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return out;
}

std::vector<std::uint32_t> radius_scan_omp(std::span<const SpatialPoint> points,
                                           Location q, double r, Metric metric,
                                           int threads) {
  // Contiguous chunks per thread, concatenated in thread order, keep the
  // output ascending like the serial kernel.
  std::vector<std::vector<std::uint32_t>> parts(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    const auto [begin, end] = chunk_of(points.size(), tid, omp_get_num_threads());
    auto& mine = parts[static_cast<std::size_t>(tid)];
    for (std::size_t i = begin; i < end; ++i) {
      if (distance(metric, points[i].location(), q) <= r) {
        mine.push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  return concat(parts);
}

void distances_serial(std::span<const SpatialPoint> points, Location q, Metric metric,
                      std::span<double> distances) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    distances[i] = distance(metric, points[i].location(), q);
  }
}

void distances_omp(std::span<const SpatialPoint> points, Location q, Metric metric,
                   std::span<double> distances, int threads) {
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    distances[static_cast<std::size_t>(i)] =
        distance(metric, points[static_cast<std::size_t>(i)].location(), q);
  }
}

std::vector<IndexPair> pair_scan_serial(std::span<const SpatialPoint> s1,
                                        std::span<const SpatialPoint> s2, double r,
                                        Metric metric) {
  std::vector<IndexPair> out;
  for (std::size_t j = 0; j < s2.size(); ++j) {
    const Location q = s2[j].location();
    for (std::size_t i = 0; i < s1.size(); ++i) {
      if (distance(metric, s1[i].location(), q) <= r) {
        out.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  }
  return out;
}

std::vector<IndexPair> pair_scan_omp(std::span<const SpatialPoint> s1,
                                     std::span<const SpatialPoint> s2, double r,
                                     Metric metric, int threads) {
  std::vector<std::vector<IndexPair>> parts(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    const auto [begin, end] = chunk_of(s2.size(), tid, omp_get_num_threads());
    auto& mine = parts[static_cast<std::size_t>(tid)];
    for (std::size_t j = begin; j < end; ++j) {
      const Location q = s2[j].location();
      for (std::size_t i = 0; i < s1.size(); ++i) {
        if (distance(metric, s1[i].location(), q) <= r) {
          mine.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        }
      }
    }
  }
  return concat(parts);
}

}  // namespace gridstream::kernels
