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
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gridstream/runtime.hpp"

namespace gridstream {

struct BBox {
  double min_x = 115.5;
  double min_y = 39.6;
  double max_x = 117.6;
  double max_y = 41.1;
};

/// Parses "minx,miny,maxx,maxy".
BBox parse_bbox(std::string_view text);

// ---------------------------------------------------------------------------
// Synthetic trajectories

enum class Distribution { Uniform, GaussianClusters };

std::optional<Distribution> parse_distribution(std::string_view name);

struct SynthSpec {
  std::size_t n = 1;
  Distribution distribution = Distribution::Uniform;
  BBox bbox;
  double rate = 1000;  // tuples per event-time second
  std::uint64_t seed = 1;
  std::size_t objects = 1000;  // distinct object ids, assigned cyclically
  std::int64_t start_ms = 1201910400000;  // 2008-02-02 00:00:00 UTC
  std::size_t clusters = 10;
  double cluster_sigma = 0.02;  // fraction of the bbox extent
};

/// Seeded points with non-decreasing timestamps at `rate`. Keys unassigned.
std::vector<SpatialPoint> synth_points(const SynthSpec& spec);

/// Writes T-Drive style CSV lines: id,datetime,lon,lat.
void synth_stream(const SynthSpec& spec, std::ostream& out);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Grid, Radius, WindowSize, WindowSlide, Rate, K };

std::string_view to_string(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::Grid;
  std::vector<double> values;
};

class SweepError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parses "axis:v1,v2,...". Axis names: grid, r, window, slide, rate, k.
/// A second axis in the same text is rejected.
SweepSpec parse_sweep(std::string_view text);

/// Everything one benchmark run depends on.
struct BenchSettings {
  BBox bbox;
  std::int64_t m = 150;
  int n_bits = 16;
  double r = 0.004;
  std::size_t k = 10;
  WindowSpec window;
  std::optional<Location> q;  // default: bbox centre
  std::size_t n = 100000;     // S1 tuples when synthesized
  double rate = 1000;         // S1 tuples per event-time second
  double query_rate = 10;     // S2 tuples per event-time second (join)
  Distribution distribution = Distribution::Uniform;
  std::uint64_t seed = 1;
  int parallelism = 1;
  Metric metric = Metric::Euclidean;
};

struct BenchRun {
  double param = 0;
  Variant variant = Variant::Grid;
  int repetition = 0;
  BenchSettings settings;
};

/// One run per (value, variant, repetition), in that nesting order. Throws
/// SweepError when a value breaks the window invariant size >= slide or any
/// other setting precondition.
std::vector<BenchRun> sweep_plan(const SweepSpec& sweep, const BenchSettings& base,
                                 int repetitions = 3);

// ---------------------------------------------------------------------------
// Bench runner

struct BenchRow {
  QueryKind query = QueryKind::Range;
  SweepAxis axis = SweepAxis::Grid;
  double param = 0;
  Variant variant = Variant::Grid;
  double throughput_tps = 0;  // mean over repetitions
  std::uint64_t distance_computations = 0;
  double pruning_ratio = 0;  // 1 - grid / naive distance computations
  std::uint64_t windows = 0;
  std::uint64_t result_hash = 0;  // fold of the per-window hashes
};

/// Raised when the grid and naive variants disagree on some window.
class BenchMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional fixed inputs; synthesized from the settings when empty.
struct BenchInputs {
  std::vector<SpatialPoint> s1;
  std::vector<SpatialPoint> s2;
};

/// Runs every planned run of `sweep` for one query type and returns one row
/// per (param, variant).
std::vector<BenchRow> run_bench(QueryKind query, const SweepSpec& sweep,
                                const BenchSettings& base, const BenchInputs& inputs = {},
                                int repetitions = 3);

/// query,axis,param,variant,throughput_tps,distance_computations,pruning_ratio,windows,result_hash
std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

/// Whitespace-separated blocks, one per query: param grid_tps naive_tps.
void write_gnuplot(const std::vector<BenchRow>& rows, std::ostream& out);

}  // namespace gridstream
