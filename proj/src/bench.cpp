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

#include "gridstream/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace gridstream {

BBox parse_bbox(std::string_view text) {
  auto nums = parse_number_list(text);
  if (!nums || nums->size() != 4) {
    throw std::invalid_argument("bbox must be minx,miny,maxx,maxy");
  }
  BBox b{(*nums)[0], (*nums)[1], (*nums)[2], (*nums)[3]};
  if (!(b.max_x > b.min_x) || !(b.max_y > b.min_y)) {
    throw std::invalid_argument("bbox max must exceed min on both axes");
  }
  return b;
}

std::optional<Distribution> parse_distribution(std::string_view name) {
  if (name == "uniform") return Distribution::Uniform;
  if (name == "gaussian-clusters") return Distribution::GaussianClusters;
  return std::nullopt;
}

std::vector<SpatialPoint> synth_points(const SynthSpec& spec) {
  if (spec.n == 0) throw std::invalid_argument("n must be >= 1");
  if (!(spec.rate > 0)) throw std::invalid_argument("rate must be > 0");
  const BBox& b = spec.bbox;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(b.min_x, b.max_x);
  std::uniform_real_distribution<double> uy(b.min_y, b.max_y);

  std::vector<Location> centres;
  if (spec.distribution == Distribution::GaussianClusters) {
    for (std::size_t i = 0; i < std::max<std::size_t>(spec.clusters, 1); ++i) {
      centres.push_back({ux(rng), uy(rng)});
    }
  }
  std::normal_distribution<double> nx(0, spec.cluster_sigma * (b.max_x - b.min_x));
  std::normal_distribution<double> ny(0, spec.cluster_sigma * (b.max_y - b.min_y));
  std::uniform_int_distribution<std::size_t> pick(0, centres.empty() ? 0 : centres.size() - 1);

  const std::size_t objects = std::max<std::size_t>(spec.objects, 1);
  std::vector<SpatialPoint> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    SpatialPoint p;
    p.object_id = std::to_string(1 + i % objects);
    p.event_time = spec.start_ms +
                   static_cast<std::int64_t>(std::floor(static_cast<double>(i) * 1000.0 / spec.rate));
    if (centres.empty()) {
      p.x = ux(rng);
      p.y = uy(rng);
    } else {
      const Location c = centres[pick(rng)];
      do {
        p.x = c.x + nx(rng);
        p.y = c.y + ny(rng);
      } while (p.x < b.min_x || p.x > b.max_x || p.y < b.min_y || p.y > b.max_y);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void synth_stream(const SynthSpec& spec, std::ostream& out) {
  for (const auto& p : synth_points(spec)) out << to_csv(p) << '\n';
}

// ---------------------------------------------------------------------------

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Grid:
      return "grid";
    case SweepAxis::Radius:
      return "r";
    case SweepAxis::WindowSize:
      return "window";
    case SweepAxis::WindowSlide:
      return "slide";
    case SweepAxis::Rate:
      return "rate";
    case SweepAxis::K:
      return "k";
  }
  return "unknown";
}

SweepSpec parse_sweep(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw SweepError("sweep must look like axis:v1,v2,...");
  const auto rest = text.substr(colon + 1);
  if (rest.find(':') != std::string_view::npos) {
    throw SweepError("sweep over exactly one axis per invocation");
  }
  const auto name = text.substr(0, colon);
  SweepSpec spec;
  if (name == "grid" || name == "m") {
    spec.axis = SweepAxis::Grid;
  } else if (name == "r") {
    spec.axis = SweepAxis::Radius;
  } else if (name == "window" || name == "window-size-ms") {
    spec.axis = SweepAxis::WindowSize;
  } else if (name == "slide" || name == "window-slide-ms") {
    spec.axis = SweepAxis::WindowSlide;
  } else if (name == "rate") {
    spec.axis = SweepAxis::Rate;
  } else if (name == "k") {
    spec.axis = SweepAxis::K;
  } else {
    throw SweepError("unknown sweep axis '" + std::string(name) + "'");
  }
  auto values = parse_number_list(rest);
  if (!values || values->empty()) throw SweepError("sweep needs at least one value");
  spec.values = std::move(*values);
  return spec;
}

namespace {

BenchSettings apply(BenchSettings s, SweepAxis axis, double v) {
  auto as_int = [&](const char* what) {
    if (v != std::floor(v) || v < 1) {
      throw SweepError(std::string(what) + " values must be positive integers");
    }
    return static_cast<std::int64_t>(v);
  };
  switch (axis) {
    case SweepAxis::Grid:
      s.m = as_int("grid");
      break;
    case SweepAxis::Radius:
      if (!(v > 0)) throw SweepError("r values must be > 0");
      s.r = v;
      break;
    case SweepAxis::WindowSize:
      s.window.size_ms = as_int("window");
      break;
    case SweepAxis::WindowSlide:
      s.window.slide_ms = as_int("slide");
      break;
    case SweepAxis::Rate:
      if (!(v > 0)) throw SweepError("rate values must be > 0");
      s.query_rate = v;
      break;
    case SweepAxis::K:
      s.k = static_cast<std::size_t>(as_int("k"));
      break;
  }
  try {
    s.window.validate();
  } catch (const std::invalid_argument& e) {
    throw SweepError(e.what());
  }
  return s;
}

Grid grid_of(const BenchSettings& s) {
  if (s.m < 1 || s.m > std::numeric_limits<std::uint32_t>::max()) {
    throw SweepError("grid size out of range: " + std::to_string(s.m));
  }
  return Grid::build(s.bbox.min_x, s.bbox.min_y, s.bbox.max_x, s.bbox.max_y,
                     static_cast<std::uint32_t>(s.m), s.n_bits);
}

Location query_point(const BenchSettings& s) {
  if (s.q) return *s.q;
  return {(s.bbox.min_x + s.bbox.max_x) / 2, (s.bbox.min_y + s.bbox.max_y) / 2};
}

struct RunOutcome {
  RuntimeMetrics metrics;
  std::vector<std::uint64_t> window_hashes;
};

RunOutcome run_once(QueryKind query, Variant variant, const BenchSettings& s,
                    const std::vector<SpatialPoint>& s1, const std::vector<SpatialPoint>& s2) {
  const Grid grid = grid_of(s);
  QuerySpec spec;
  spec.kind = query;
  spec.variant = variant;
  spec.q = query_point(s);
  spec.r = s.r;
  spec.k = s.k;
  spec.window = s.window;
  spec.metric = s.metric;

  PipelineConfig config;
  config.parallelism = s.parallelism;

  std::vector<std::unique_ptr<PointStream>> sources;
  sources.push_back(memory_source(s1, grid));
  if (query == QueryKind::Join) sources.push_back(memory_source(s2, grid));

  RunOutcome out;
  out.metrics = run_pipeline(grid, std::move(sources), spec, config, [&](QueryResultBatch&& b) {
    out.window_hashes.push_back(result_hash(b));
  });
  return out;
}

std::uint64_t fold(const std::vector<std::uint64_t>& hashes) {
  std::uint64_t h = fnv1a64("");
  for (auto v : hashes) h = fnv1a64(std::to_string(v), h);
  return h;
}

}  // namespace

std::vector<BenchRun> sweep_plan(const SweepSpec& sweep, const BenchSettings& base,
                                 int repetitions) {
  if (sweep.values.empty()) throw SweepError("sweep needs at least one value");
  if (repetitions < 1) throw SweepError("repetitions must be >= 1");
  std::vector<BenchRun> runs;
  for (double v : sweep.values) {
    const BenchSettings s = apply(base, sweep.axis, v);
    for (Variant variant : {Variant::Grid, Variant::Naive}) {
      for (int rep = 0; rep < repetitions; ++rep) runs.push_back({v, variant, rep, s});
    }
  }
  return runs;
}

std::vector<BenchRow> run_bench(QueryKind query, const SweepSpec& sweep,
                                const BenchSettings& base, const BenchInputs& inputs,
                                int repetitions) {
  const auto plan = sweep_plan(sweep, base, repetitions);

  // Inputs depend only on the S1/S2 settings; cache by query rate so a rate
  // sweep regenerates S2 and everything else reuses one trace.
  std::vector<SpatialPoint> s1 = inputs.s1;
  if (s1.empty()) {
    SynthSpec synth;
    synth.n = base.n;
    synth.distribution = base.distribution;
    synth.bbox = base.bbox;
    synth.rate = base.rate;
    synth.seed = base.seed;
    s1 = synth_points(synth);
  }
  std::map<double, std::vector<SpatialPoint>> s2_by_rate;
  auto s2_for = [&](const BenchSettings& s) -> const std::vector<SpatialPoint>& {
    auto it = s2_by_rate.find(s.query_rate);
    if (it != s2_by_rate.end()) return it->second;
    std::vector<SpatialPoint> s2 = inputs.s2;
    if (s2.empty() && query == QueryKind::Join) {
      const std::int64_t t0 = s1.front().event_time;
      const std::int64_t t1 = s1.back().event_time;
      SynthSpec synth;
      synth.n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(static_cast<double>(t1 - t0 + 1) / 1000.0 *
                                                    s.query_rate)));
      synth.distribution = s.distribution;
      synth.bbox = s.bbox;
      synth.rate = s.query_rate;
      synth.seed = s.seed + 1;
      synth.start_ms = t0;
      synth.objects = synth.n;
      s2 = synth_points(synth);
      for (auto& p : s2) p.object_id = "q" + p.object_id;
    }
    return s2_by_rate.emplace(s.query_rate, std::move(s2)).first->second;
  };

  struct Accum {
    double tps_sum = 0;
    int reps = 0;
    std::uint64_t dc = 0;
    std::uint64_t windows = 0;
    std::vector<std::uint64_t> hashes;
  };
  // (param, variant) in plan order.
  std::vector<std::pair<std::pair<double, Variant>, Accum>> acc;
  auto slot = [&](double p, Variant v) -> Accum& {
    for (auto& [key, a] : acc) {
      if (key.first == p && key.second == v) return a;
    }
    acc.push_back({{p, v}, {}});
    return acc.back().second;
  };

  for (const auto& run : plan) {
    auto outcome = run_once(query, run.variant, run.settings, s1, s2_for(run.settings));
    Accum& a = slot(run.param, run.variant);
    a.tps_sum += outcome.metrics.throughput_tps;
    ++a.reps;
    if (run.repetition == 0) {
      a.dc = outcome.metrics.distance_computations;
      a.windows = outcome.metrics.windows_fired;
      a.hashes = std::move(outcome.window_hashes);
    } else if (outcome.window_hashes != a.hashes) {
      throw BenchMismatch("repetition " + std::to_string(run.repetition) +
                          " changed the results at param " + std::to_string(run.param));
    }
  }

  std::vector<BenchRow> rows;
  for (double v : sweep.values) {
    const Accum& g = slot(v, Variant::Grid);
    const Accum& n = slot(v, Variant::Naive);
    if (g.hashes != n.hashes) {
      std::size_t w = 0;
      while (w < g.hashes.size() && w < n.hashes.size() && g.hashes[w] == n.hashes[w]) ++w;
      throw BenchMismatch("grid and naive " + std::string(to_string(query)) +
                          " results differ at param " + std::to_string(v) + ", window #" +
                          std::to_string(w));
    }
    const double ratio =
        n.dc == 0 ? 0.0
                  : std::clamp(1.0 - static_cast<double>(g.dc) / static_cast<double>(n.dc), 0.0,
                               1.0);
    for (auto [variant, a] : {std::pair{Variant::Grid, &g}, std::pair{Variant::Naive, &n}}) {
      BenchRow row;
      row.query = query;
      row.axis = sweep.axis;
      row.param = v;
      row.variant = variant;
      row.throughput_tps = a->tps_sum / a->reps;
      row.distance_computations = a->dc;
      row.pruning_ratio = variant == Variant::Grid ? ratio : 0.0;
      row.windows = a->windows;
      row.result_hash = fold(a->hashes);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_csv_header() {
  return "query,axis,param,variant,throughput_tps,distance_computations,pruning_ratio,windows,"
         "result_hash";
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string bench_csv_row(const BenchRow& row) {
  std::ostringstream out;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(row.result_hash));
  out << to_string(row.query) << ',' << to_string(row.axis) << ',' << shortest(row.param) << ','
      << (row.variant == Variant::Grid ? "grid" : "naive") << ','
      << shortest(std::round(row.throughput_tps * 100) / 100) << ','
      << row.distance_computations << ',' << shortest(std::round(row.pruning_ratio * 1e6) / 1e6)
      << ',' << row.windows << ',' << hash;
  return out.str();
}

void write_gnuplot(const std::vector<BenchRow>& rows, std::ostream& out) {
  std::vector<QueryKind> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.query) == order.end()) order.push_back(r.query);
  }
  bool first_block = true;
  for (QueryKind q : order) {
    if (!first_block) out << "\n\n";
    first_block = false;
    std::map<double, std::pair<double, double>> by_param;
    std::string axis;
    for (const auto& r : rows) {
      if (r.query != q) continue;
      axis = std::string(to_string(r.axis));
      auto& cell = by_param[r.param];
      (r.variant == Variant::Grid ? cell.first : cell.second) = r.throughput_tps;
    }
    out << "# " << to_string(q) << ": " << axis << " grid_tps naive_tps\n";
    for (const auto& [param, tps] : by_param) {
      out << shortest(param) << ' ' << shortest(tps.first) << ' ' << shortest(tps.second) << '\n';
    }
  }
}

}  // namespace gridstream
