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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gridstream/bench.hpp"
#include "gridstream/runtime.hpp"
#include "oracle/oracle.hpp"
#include "support.hpp"

namespace gs = gridstream;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1 -------------------------------------------------------------------------

Outcome worked_examples() {
  auto g = gs::Grid::build(0, 0, 90, 90, 9, 4);
  const auto key = g.key_string(g.encode(g.cell_of(25, 42)));
  const auto p = gs::layer_params(30, 10);
  const bool ok = key == "00100100" && p.guaranteed == 1 && p.candidate == 3;
  return {ok, "key=" + key + " g=" + std::to_string(p.guaranteed) +
                  " c=" + std::to_string(p.candidate)};
}

// 2-4 -----------------------------------------------------------------------

/// Random query point: interior or exactly on a cell corner.
gs::Location pick_query(const gs::Grid& g, std::mt19937_64& rng, bool corner) {
  std::uniform_real_distribution<double> ux(g.min_x(), g.max_x()), uy(g.min_y(), g.max_y());
  gs::Location q{ux(rng), uy(rng)};
  if (!corner) return q;
  auto c = g.cell_of(q.x, q.y);
  c.x = std::max<std::uint32_t>(c.x, 1);
  c.y = std::max<std::uint32_t>(c.y, 1);
  return g.cell_origin(c);
}

struct Tally {
  std::size_t windows = 0;
  std::size_t bad = 0;
  std::string first;
  void add(const ts::Verdict& v) {
    windows += v.windows;
    if (v.mismatches && bad == 0) first = v.first_problem;
    bad += v.mismatches;
  }
  Outcome outcome(std::size_t min_windows) const {
    std::string d = std::to_string(windows - bad) + "/" + std::to_string(windows) +
                    " windows equal";
    if (bad) d += "; first: " + first;
    return {bad == 0 && windows >= min_windows, d};
  }
};

// Each run spans four sliding windows (10 s / 5 s over 20 s of events), so a
// window holds between half and all of the run's points.
Outcome range_or_knn(gs::QueryKind kind) {
  std::mt19937_64 rng(kind == gs::QueryKind::Range ? 2 : 3);
  Tally tally;
  const std::uint32_t grids[] = {10, 50, 150};
  const std::size_t ks[] = {1, 10, 50};
  for (int run = 0; run < 36; ++run) {
    auto g = gs::Grid::build(0, 0, 100, 80, grids[run % 3]);
    const std::size_t n = 2000 + rng() % 18001;
    auto pts = ts::uniform_points(rng, n, 0, 0, 100, 80, 0, 20000, n / 4, "o");
    gs::QuerySpec q;
    q.kind = kind;
    q.variant = gs::Variant::Grid;
    q.q = pick_query(g, rng, run % 2 == 1);
    q.r = g.cell_len() * std::uniform_real_distribution<double>(0.3, 5.0)(rng);
    q.k = ks[(run / 3) % 3];
    q.window = {10000, 5000, 0};
    gs::PipelineConfig cfg;
    cfg.parallelism = 1 + run % 4;
    auto batches = ts::run(g, pts, nullptr, q, cfg);
    tally.add(kind == gs::QueryKind::Range ? ts::check_range(batches, pts, q)
                                           : ts::check_knn(batches, pts, q));
  }
  return tally.outcome(100);
}

// Tumbling 10 s windows with exactly 1000 S1 points each.
Outcome join_equivalence() {
  std::mt19937_64 rng(4);
  Tally tally;
  const std::uint32_t grids[] = {10, 50, 150};
  const std::size_t s2_sizes[] = {1, 10, 100};
  for (int run = 0; run < 18; ++run) {
    auto g = gs::Grid::build(0, 0, 100, 100, grids[run % 3]);
    const std::size_t n2 = s2_sizes[(run / 3) % 3];
    std::vector<gs::SpatialPoint> s1, s2;
    for (int w = 0; w < 3; ++w) {
      auto a = ts::uniform_points(rng, 1000, 0, 0, 100, 100, w * 10000, 10000, 0,
                                  "p" + std::to_string(w) + "_");
      auto b = ts::uniform_points(rng, n2, 0, 0, 100, 100, w * 10000, 10000, 0,
                                  "q" + std::to_string(w) + "_");
      s1.insert(s1.end(), a.begin(), a.end());
      s2.insert(s2.end(), b.begin(), b.end());
    }
    gs::QuerySpec q;
    q.kind = gs::QueryKind::Join;
    q.r = g.cell_len() * std::uniform_real_distribution<double>(0.3, 5.0)(rng);
    q.window = {10000, 10000, 0};
    gs::PipelineConfig cfg;
    cfg.parallelism = 1 + run % 4;
    tally.add(ts::check_join(ts::run(g, s1, &s2, q, cfg), s1, s2, q));
  }
  return tally.outcome(50);
}

// 5 -------------------------------------------------------------------------

Outcome parallelism_invariance() {
  gs::SynthSpec spec;
  spec.n = 100000;
  auto s1 = gs::synth_points(spec);
  spec.seed = 2;
  spec.n = 1000;
  spec.rate = 10;
  auto s2 = gs::synth_points(spec);
  for (auto& p : s2) p.object_id = "q" + p.object_id;
  const gs::BBox box;
  auto g = gs::Grid::build(box.min_x, box.min_y, box.max_x, box.max_y, 150);
  std::string detail;
  bool ok = true;
  for (auto kind : {gs::QueryKind::Range, gs::QueryKind::Knn, gs::QueryKind::Join}) {
    gs::QuerySpec q;
    q.kind = kind;
    q.q = {116.4, 39.9};
    q.r = kind == gs::QueryKind::Join ? 0.02 : 0.1;
    q.k = 10;
    q.window = {10000, 5000, 0};
    const auto* second = kind == gs::QueryKind::Join ? &s2 : nullptr;
    std::vector<std::string> base;
    std::size_t results = 0;
    for (int p : {1, 2, 4, 8}) {
      gs::PipelineConfig cfg;
      cfg.parallelism = p;
      auto batches = ts::run(g, s1, second, q, cfg);
      auto lines = ts::lines(batches);
      if (p == 1) {
        base = std::move(lines);
        for (const auto& b : batches) results += b.size();
      } else if (lines != base) {
        ok = false;
        detail += std::string(gs::to_string(kind)) + " differs at P=" + std::to_string(p) + "; ";
      }
    }
    detail += std::string(gs::to_string(kind)) + ": " + std::to_string(base.size()) +
              " windows, " + std::to_string(results) + " results; ";
  }
  return {ok, detail};
}

// 6 -------------------------------------------------------------------------

Outcome pruning() {
  gs::SynthSpec spec;
  spec.n = 100000;
  const auto pts = gs::synth_points(spec);
  const gs::BBox box;
  auto g = gs::Grid::build(box.min_x, box.min_y, box.max_x, box.max_y, 150);
  gs::QuerySpec q;
  q.kind = gs::QueryKind::Range;
  q.q = {(box.min_x + box.max_x) / 2, (box.min_y + box.max_y) / 2};
  q.r = 0.004;
  q.window = {10000, 5000, 0};
  gs::RuntimeMetrics grid_m, naive_m;
  auto a = ts::run(g, pts, nullptr, q, {}, &grid_m);
  q.variant = gs::Variant::Naive;
  auto b = ts::run(g, pts, nullptr, q, {}, &naive_m);
  const auto sets = gs::layer_sets(g, g.cell_of(q.q.x, q.q.y), q.r);
  const double cells = static_cast<double>(sets.guaranteed.size() + sets.candidate.size());
  // The box is not square, so the grid has fewer than m*m cells; the bound
  // is checked against both the real cell count and m*m.
  const double naive_dc = static_cast<double>(naive_m.distance_computations);
  const double real_bound = cells / static_cast<double>(g.cell_count()) * naive_dc * 1.5;
  const double square_bound = cells / (150.0 * 150.0) * naive_dc * 1.5;
  const double bound = std::min(real_bound, square_bound);
  const double ratio = 1.0 - static_cast<double>(grid_m.distance_computations) /
                                 static_cast<double>(naive_m.distance_computations);
  const bool ok = ts::lines(a) == ts::lines(b) &&
                  static_cast<double>(grid_m.distance_computations) <= bound && ratio > 0.9;
  return {ok, "grid dc=" + std::to_string(grid_m.distance_computations) + " naive dc=" +
                  std::to_string(naive_m.distance_computations) + fmt(" bound=%.1f", bound) + fmt(" (real-cell bound %.1f)", real_bound) +
                  fmt(" pruning_ratio=%.6f", ratio)};
}

// 7 -------------------------------------------------------------------------

Outcome throughput() {
  gs::SynthSpec spec;
  spec.n = 1000000;
  auto s1 = gs::synth_points(spec);
  spec.seed = 2;
  spec.rate = 10;
  spec.n = static_cast<std::size_t>(
      std::ceil((s1.back().event_time - s1.front().event_time) / 1000.0 * spec.rate));
  auto s2 = gs::synth_points(spec);
  for (auto& p : s2) p.object_id = "q" + p.object_id;
  const gs::BBox box;
  auto g = gs::Grid::build(box.min_x, box.min_y, box.max_x, box.max_y, 150);
  bool ok = true;
  std::string detail;
  for (auto kind : {gs::QueryKind::Range, gs::QueryKind::Join}) {
    gs::QuerySpec q;
    q.kind = kind;
    q.q = {116.4, 39.9};
    q.r = 0.004;
    q.window = {10000, 5000, 0};
    const auto* second = kind == gs::QueryKind::Join ? &s2 : nullptr;
    // Median of three runs per variant; runs alternate to share any drift.
    std::vector<double> runs[2];
    for (int rep = 0; rep < 3; ++rep) {
      for (auto variant : {gs::Variant::Grid, gs::Variant::Naive}) {
        q.variant = variant;
        gs::RuntimeMetrics m;
        ts::run(g, s1, second, q, {}, &m);
        runs[variant == gs::Variant::Naive].push_back(m.throughput_tps);
      }
    }
    double tps[2];
    for (int v = 0; v < 2; ++v) {
      std::sort(runs[v].begin(), runs[v].end());
      tps[v] = runs[v][1];
    }
    const double ratio = tps[0] / tps[1];
    ok = ok && ratio >= 1.2;
    detail += std::string(gs::to_string(kind)) + fmt(" grid=%.0f", tps[0]) +
              fmt(" naive=%.0f", tps[1]) + fmt(" ratio=%.2fx; ", ratio);
  }
  return {ok, detail};
}

// 8 -------------------------------------------------------------------------

/// Least-squares slope of grid-variant throughput against the swept value.
double slope(const std::vector<gs::BenchRow>& rows) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& r : rows) {
    if (r.variant == gs::Variant::Grid) xy.push_back({r.param, r.throughput_tps});
  }
  double mx = 0, my = 0;
  for (auto [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= xy.size();
  my /= xy.size();
  double num = 0, den = 0;
  for (auto [x, y] : xy) {
    num += (x - mx) * (y - my);
    den += (x - mx) * (x - mx);
  }
  return num / den;
}

std::string series(const std::vector<gs::BenchRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    if (r.variant != gs::Variant::Grid) continue;
    out += fmt("%g:", r.param) + fmt("%.0f ", r.throughput_tps);
  }
  return out;
}

Outcome trends() {
  gs::BenchSettings base;
  base.n = 100000;
  base.window = {10000, 5000, 0};
  struct Check {
    const char* sweep;
    int sign;  // expected slope sign
  };
  const Check checks[] = {{"r:0.004,0.02,0.05,0.1", -1},
                          {"window:5000,10000,20000,40000", -1},
                          {"slide:1000,2500,5000,10000", +1},
                          {"rate:5,10,50,100", -1}};
  bool ok = true;
  std::string detail;
  for (const auto& c : checks) {
    auto sweep = gs::parse_sweep(c.sweep);
    auto s = base;
    if (sweep.axis == gs::SweepAxis::WindowSize) s.window.slide_ms = 5000;
    auto rows = gs::run_bench(gs::QueryKind::Join, sweep, s, {}, 3);
    const double k = slope(rows);
    const bool good = (k > 0 ? 1 : -1) == c.sign;
    ok = ok && good;
    detail += std::string(gs::to_string(sweep.axis)) + (good ? " ok [" : " WRONG [") +
              series(rows) + "]; ";
  }
  return {ok, detail};
}

// 9 -------------------------------------------------------------------------

Outcome layer_safety() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u01(0, 1);
  std::size_t guaranteed = 0, pruned = 0, violations = 0;
  for (int draw = 0; draw < 100000; ++draw) {
    const double x0 = u01(rng) * 200 - 100, y0 = u01(rng) * 200 - 100;
    const double w = 0.01 + u01(rng) * 100, h = w * (0.25 + u01(rng));
    const std::uint32_t m = 1 + rng() % 200;
    auto g = gs::Grid::build(x0, y0, x0 + w, y0 + h, m);
    const double l = g.cell_len();
    const double r = l * (0.05 + u01(rng) * 8);
    const auto p = gs::layer_params(r, l);
    const gs::CellCoord qc{static_cast<std::uint32_t>(rng() % g.x_cells()),
                           static_cast<std::uint32_t>(rng() % g.y_cells())};
    // Target cell within c + 2 rings so every layer gets drawn.
    const std::int64_t reach = p.candidate + 2;
    auto offset = [&](std::uint32_t base, std::uint32_t cells) {
      const std::int64_t v = static_cast<std::int64_t>(base) +
                             static_cast<std::int64_t>(rng() % (2 * reach + 1)) - reach;
      return static_cast<std::uint32_t>(std::clamp<std::int64_t>(v, 0, cells - 1));
    };
    const gs::CellCoord pc{offset(qc.x, g.x_cells()), offset(qc.y, g.y_cells())};
    const auto qo = g.cell_origin(qc), po = g.cell_origin(pc);
    const double qx = qo.x + u01(rng) * l, qy = qo.y + u01(rng) * l;
    const double px = po.x + u01(rng) * l, py = po.y + u01(rng) * l;
    const double d = std::hypot(px - qx, py - qy);
    const auto layer = gs::layer_sets(g, qc, p).classify(pc);
    const bool is_guaranteed = layer == gs::Layer::Guaranteed;
    const bool is_pruned = layer == gs::Layer::Pruned;
    guaranteed += is_guaranteed;
    pruned += is_pruned;
    if ((is_guaranteed && d > r) || (is_pruned && d <= r)) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations in 100000 draws (" +
                               std::to_string(guaranteed) + " guaranteed, " +
                               std::to_string(pruned) + " pruned)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"worked examples", worked_examples},
      {"range equals oracle", [] { return range_or_knn(gs::QueryKind::Range); }},
      {"kNN equals oracle", [] { return range_or_knn(gs::QueryKind::Knn); }},
      {"join equals oracle", join_equivalence},
      {"parallelism invariance", parallelism_invariance},
      {"pruning effectiveness", pruning},
      {"grid vs naive throughput", throughput},
      {"parameter trends", trends},
      {"layer safety sampling", layer_safety},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
