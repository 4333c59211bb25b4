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

// Serial vs OpenMP distance kernels, and the grid vs naive window operators.

#include <benchmark/benchmark.h>

#include <random>

#include "gridstream/kernels.hpp"
#include "gridstream/query.hpp"

namespace gs = gridstream;
namespace gk = gridstream::kernels;

namespace {

std::vector<gs::SpatialPoint> points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(115.5, 117.6), uy(39.6, 41.1);
  std::vector<gs::SpatialPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].object_id = std::to_string(i);
    out[i].x = ux(rng);
    out[i].y = uy(rng);
  }
  return out;
}

void BM_RadiusScan(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 1);
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gk::radius_scan(pts, {116.4, 39.9}, 0.05, gs::Metric::Euclidean, threads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RadiusScan)->ArgsProduct({{10000, 100000}, {1, 2, 4}})->UseRealTime();

void BM_PairScan(benchmark::State& state) {
  const auto s1 = points(10000, 2);
  const auto s2 = points(static_cast<std::size_t>(state.range(0)), 3);
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gk::pair_scan(s1, s2, 0.004, gs::Metric::Euclidean, threads));
  }
  state.SetItemsProcessed(state.iterations() * 10000 * state.range(0));
}
BENCHMARK(BM_PairScan)->ArgsProduct({{10, 100}, {1, 2, 4}})->UseRealTime();

void BM_RangeGridVsNaive(benchmark::State& state) {
  auto grid = gs::Grid::build(115.5, 39.6, 117.6, 41.1, 150);
  auto pts = points(10000, 4);
  for (auto& p : pts) gs::assign_key(grid, p);
  const gs::Location q{116.4, 39.9};
  const auto sets = gs::layer_sets(grid, grid.cell_of(q.x, q.y), 0.004);
  gs::DistanceCounter dc;
  for (auto _ : state) {
    if (state.range(0)) {
      auto f = gs::range_filter(pts, sets, grid);
      benchmark::DoNotOptimize(gs::range_refine(f.guaranteed, f.candidate, q, 0.004, dc));
    } else {
      benchmark::DoNotOptimize(gs::range_naive(pts, q, 0.004, dc));
    }
  }
  state.SetLabel(state.range(0) ? "grid" : "naive");
}
BENCHMARK(BM_RangeGridVsNaive)->Arg(1)->Arg(0);

}  // namespace

BENCHMARK_MAIN();
