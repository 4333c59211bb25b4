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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gridstream/bench.hpp"

namespace gs = gridstream;

TEST(Sweep, Parse) {
  auto s = gs::parse_sweep("grid:50,100,150,200");
  EXPECT_EQ(s.axis, gs::SweepAxis::Grid);
  EXPECT_EQ(s.values, (std::vector<double>{50, 100, 150, 200}));
  EXPECT_EQ(gs::parse_sweep("r:0.001,0.004").axis, gs::SweepAxis::Radius);
  EXPECT_THROW(gs::parse_sweep("grid:50,100;r:0.001"), gs::SweepError);
  EXPECT_THROW(gs::parse_sweep("grid:50:r:1"), gs::SweepError);
  EXPECT_THROW(gs::parse_sweep("speed:1,2"), gs::SweepError);
  EXPECT_THROW(gs::parse_sweep("grid:"), gs::SweepError);
  EXPECT_THROW(gs::parse_sweep("grid:1,x"), gs::SweepError);
}

TEST(Sweep, PlanShape) {
  gs::BenchSettings base;
  base.window = {10000, 5000, 0};
  auto plan = gs::sweep_plan(gs::parse_sweep("grid:50,100,150,200"), base);
  ASSERT_EQ(plan.size(), 24u);
  EXPECT_EQ(plan[0].settings.m, 50);
  EXPECT_EQ(plan[0].variant, gs::Variant::Grid);
  EXPECT_EQ(plan[3].variant, gs::Variant::Naive);
  EXPECT_EQ(plan[23].settings.m, 200);
  EXPECT_EQ(plan[23].repetition, 2);
}

TEST(Sweep, RejectsSlideLargerThanSize) {
  gs::BenchSettings base;
  base.window = {10000, 5000, 0};
  EXPECT_THROW(gs::sweep_plan(gs::parse_sweep("slide:5000,20000"), base), gs::SweepError);
  EXPECT_THROW(gs::sweep_plan(gs::parse_sweep("window:1000"), base), gs::SweepError);
  EXPECT_THROW(gs::sweep_plan(gs::parse_sweep("grid:0"), base), gs::SweepError);
  EXPECT_THROW(gs::sweep_plan(gs::parse_sweep("r:-1"), base), gs::SweepError);
}

TEST(Synth, SinglePointAndDeterminism) {
  gs::SynthSpec spec;
  spec.n = 1;
  EXPECT_EQ(gs::synth_points(spec).size(), 1u);
  spec.n = 5000;
  spec.seed = 7;
  std::ostringstream a, b, c;
  gs::synth_stream(spec, a);
  gs::synth_stream(spec, b);
  spec.seed = 8;
  gs::synth_stream(spec, c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
  const std::string text = a.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5000);
}

TEST(Synth, RateAndBounds) {
  gs::SynthSpec spec;
  spec.n = 10000;
  spec.rate = 500;
  const auto pts = gs::synth_points(spec);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    ASSERT_LE(pts[i - 1].event_time, pts[i].event_time);
  }
  EXPECT_NEAR(static_cast<double>(pts.back().event_time - pts.front().event_time), 20000, 10);
  for (const auto& p : pts) {
    ASSERT_GE(p.x, spec.bbox.min_x);
    ASSERT_LT(p.x, spec.bbox.max_x);
    ASSERT_GE(p.y, spec.bbox.min_y);
    ASSERT_LT(p.y, spec.bbox.max_y);
  }
}

TEST(Synth, UniformCoversTheBox) {
  gs::SynthSpec spec;
  spec.n = 100000;
  const auto pts = gs::synth_points(spec);
  auto g = gs::Grid::build(spec.bbox.min_x, spec.bbox.min_y, spec.bbox.max_x, spec.bbox.max_y, 50);
  std::vector<double> counts(g.cell_count());
  for (const auto& p : pts) {
    const auto c = g.cell_of(p.x, p.y);
    ++counts[c.x * g.y_cells() + c.y];
  }
  // Cells on the clamped top edge are partial; compare full ones only.
  std::vector<double> full;
  for (std::uint32_t x = 0; x < g.x_cells(); ++x) {
    for (std::uint32_t y = 0; y + 1 < g.y_cells(); ++y) full.push_back(counts[x * g.y_cells() + y]);
  }
  const double mean = std::accumulate(full.begin(), full.end(), 0.0) / full.size();
  double var = 0;
  for (double c : full) var += (c - mean) * (c - mean);
  EXPECT_LT(std::sqrt(var / full.size()) / mean, 0.2);
}

TEST(Synth, ClustersAreSkewed) {
  gs::SynthSpec spec;
  spec.n = 20000;
  spec.distribution = gs::Distribution::GaussianClusters;
  const auto pts = gs::synth_points(spec);
  ASSERT_EQ(pts.size(), 20000u);
  auto g = gs::Grid::build(spec.bbox.min_x, spec.bbox.min_y, spec.bbox.max_x, spec.bbox.max_y, 20);
  std::vector<int> counts(g.cell_count());
  for (const auto& p : pts) {
    const auto c = g.cell_of(p.x, p.y);
    ++counts[c.x * g.y_cells() + c.y];
  }
  EXPECT_GT(*std::max_element(counts.begin(), counts.end()), 20000 / 400 * 5);
  EXPECT_EQ(gs::parse_distribution("gaussian-clusters"), gs::Distribution::GaussianClusters);
  EXPECT_FALSE(gs::parse_distribution("zipf").has_value());
}

TEST(Bench, SmallRunAgreesAcrossVariants) {
  gs::BenchSettings base;
  base.n = 20000;
  base.window = {10000, 5000, 0};
  base.r = 0.02;
  for (auto kind : {gs::QueryKind::Range, gs::QueryKind::Knn, gs::QueryKind::Join}) {
    auto rows = gs::run_bench(kind, gs::parse_sweep("grid:50,150"), base, {}, 1);
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 0; i < rows.size(); i += 2) {
      EXPECT_EQ(rows[i].variant, gs::Variant::Grid);
      EXPECT_EQ(rows[i + 1].variant, gs::Variant::Naive);
      EXPECT_EQ(rows[i].result_hash, rows[i + 1].result_hash);
      EXPECT_EQ(rows[i].windows, rows[i + 1].windows);
      EXPECT_GE(rows[i].pruning_ratio, 0.0);
      EXPECT_LE(rows[i].pruning_ratio, 1.0);
      EXPECT_GT(rows[i].throughput_tps, 0);
      EXPECT_LE(rows[i].distance_computations, rows[i + 1].distance_computations);
    }
  }
}

TEST(Bench, CsvAndGnuplot) {
  EXPECT_EQ(gs::bench_csv_header(),
            "query,axis,param,variant,throughput_tps,distance_computations,pruning_ratio,"
            "windows,result_hash");
  gs::BenchRow row;
  row.param = 150;
  const auto line = gs::bench_csv_row(row);
  EXPECT_EQ(line.rfind("range,grid,150,grid,", 0), 0u) << line;
  std::ostringstream plot;
  gs::BenchRow naive = row;
  naive.variant = gs::Variant::Naive;
  gs::write_gnuplot({row, naive}, plot);
  EXPECT_NE(plot.str().find("150"), std::string::npos);
}

TEST(Bench, ParseBbox) {
  auto b = gs::parse_bbox("115.5,39.6,117.6,41.1");
  EXPECT_EQ(b.max_y, 41.1);
  EXPECT_THROW(gs::parse_bbox("1,2,3"), std::invalid_argument);
  EXPECT_THROW(gs::parse_bbox("3,2,1,4"), std::invalid_argument);
}
