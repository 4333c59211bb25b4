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

#include "oracle/oracle.hpp"

namespace {

gridstream::SpatialPoint pt(std::string id, double x, double y, std::int64_t t = 0) {
  gridstream::SpatialPoint p;
  p.object_id = std::move(id);
  p.x = x;
  p.y = y;
  p.event_time = t;
  return p;
}

}  // namespace

TEST(Oracle, RangeIsClosedBall) {
  auto out = oracle::range({pt("b", 3, 4), pt("a", 0, 0), pt("c", 3, 4.01)}, 0, 0, 5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].object_id, "a");
  EXPECT_EQ(out[1].object_id, "b");
}

TEST(Oracle, KnnTruncatesAfterRadius) {
  auto out = oracle::knn({pt("far", 9, 0), pt("b", 1, 0), pt("a", -1, 0)}, 0, 0, 5, 3);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].point.object_id, "a");
  EXPECT_EQ(out[1].point.object_id, "b");
}

TEST(Oracle, JoinPairs) {
  auto out = oracle::join({pt("p1", 0, 0), pt("p2", 10, 0)}, {pt("q1", 1, 0)}, 2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].s1.object_id, "p1");
}

TEST(Oracle, DropLate) {
  auto out = oracle::drop_late({pt("a", 0, 0, 100), pt("b", 0, 0, 50), pt("c", 0, 0, 95)}, 10);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].object_id, "c");
}

TEST(Oracle, WindowsIncludeEmptyOnes) {
  auto w = oracle::windows({pt("a", 0, 0, 1000), pt("b", 0, 0, 31000)}, 10000, 5000);
  // starts 0 .. 30000
  ASSERT_EQ(w.size(), 7u);
  EXPECT_TRUE(w.at(10000).empty());
  EXPECT_EQ(w.at(25000).size(), 1u);
}

TEST(Oracle, HaversineOneDegree) {
  EXPECT_NEAR(oracle::dist(oracle::Dist::Haversine, 0, 0, 0, 1), 111195.08, 1.0);
}
