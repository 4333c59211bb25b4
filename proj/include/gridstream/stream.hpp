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

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridstream/grid.hpp"

namespace gridstream {

/// A timestamped 2-D point. `cell` is only meaningful after assign_key.
struct SpatialPoint {
  std::string object_id;
  double x = 0;
  double y = 0;
  std::int64_t event_time = 0;  // ms since epoch
  CellKey cell;

  Location location() const { return {x, y}; }
  friend bool operator==(const SpatialPoint&, const SpatialPoint&) = default;
};

/// Total order used wherever results need a canonical sequence.
bool identity_less(const SpatialPoint& a, const SpatialPoint& b);

enum class RecordFormat { Csv, GeoJson };

std::optional<RecordFormat> parse_format(std::string_view name);

/// Parses "YYYY-MM-DD HH:MM:SS[.fff]" (also accepts 'T' as separator) as a
/// naive timestamp, or a plain integer as epoch milliseconds. Times before
/// the epoch are rejected.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Inverse of the datetime form of parse_timestamp. Milliseconds are only
/// written when non-zero.
std::string format_datetime(std::int64_t epoch_ms);

/// One CSV line "id,datetime,lon,lat" or one GeoJSON Feature with Point
/// geometry and properties {oID, timestamp}. Returns nullopt on malformed
/// input. The cell key is left unset.
std::optional<SpatialPoint> parse_point(std::string_view record,
                                        RecordFormat format);

/// CSV line in the layout parse_point accepts; coordinates use the shortest
/// representation that round-trips.
std::string to_csv(const SpatialPoint& p);
std::string to_geojson(const SpatialPoint& p);

/// Sets p.cell from its coordinates, or returns false if p is outside grid.
bool assign_key(const Grid& grid, SpatialPoint& p);

struct SourceCounters {
  std::uint64_t records = 0;     // non-blank input lines
  std::uint64_t emitted = 0;
  std::uint64_t dropped = 0;     // outside the grid
  std::uint64_t malformed = 0;
  std::uint64_t io_errors = 0;
};

/// Ordered stream of keyed points. Single consumer.
class PointStream {
 public:
  virtual ~PointStream() = default;
  /// Returns false at end of stream.
  virtual bool next(SpatialPoint& out) = 0;
  virtual const SourceCounters& counters() const = 0;
};

enum class SourceKind { FileReplay, Stdin, TcpLine };

struct SourceSpec {
  SourceKind kind = SourceKind::FileReplay;
  RecordFormat format = RecordFormat::Csv;
  std::string path;          // FileReplay
  std::uint16_t port = 0;    // TcpLine; 0 picks a free port
  double replay_speed = 0;   // 0 = as fast as possible
  int loop_count = 1;        // FileReplay only
};

/// Raised when a source cannot be opened.
class SourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Opens a source emitting keyed points. Unreadable files and unbindable
/// ports throw SourceError here rather than mid-stream.
std::unique_ptr<PointStream> open_source(const SourceSpec& spec,
                                         const Grid& grid);

/// For a TcpLine stream returned by open_source: the bound port.
std::uint16_t bound_port(const PointStream& stream);

/// Replays pre-parsed points (keys are (re)assigned on the given grid).
std::unique_ptr<PointStream> memory_source(std::vector<SpatialPoint> points,
                                           const Grid& grid);

/// Comma-separated numbers, e.g. a bbox "minx,miny,maxx,maxy".
std::optional<std::vector<double>> parse_number_list(std::string_view text);

}  // namespace gridstream
